#include <stdio.h>
#include <math.h>
double myTable[5002][5002], myTableOut[5002][5002];
void init(double t[5002][5002], double o[5002][5002])
{
    int i, j;
    for (i = 0; i < 5002; i++) {
        for (j = 0; j < 5002; j++) {
            t[i][j] = 0.0;
            o[i][j] = 0.0;
        }
    }
    for (i = 0; i < 5002; i++) {
        t[i][0] = 1.0;
        t[i][5001] = 1.0;
        o[i][0] = 1.0;
        o[i][5001] = 1.0;
    }
    for (j = 0; j < 5002; j++) {
        t[0][j] = 1.0;
        t[5001][j] = 1.0;
        o[0][j] = 1.0;
        o[5001][j] = 1.0;
    }
}
void displayRegion(double t[5002][5002])
{
    int i, j;
    double corner = 0.0;
    for (i = 0; i < 4; i++) {
        for (j = 0; j < 4; j++) {
            corner += t[i][j];
        }
    }
    printf("corner:%.12g\n", corner);
}
void sweep(double t[5002][5002], double o[5002][5002])
{
    int i, j;
    for (i = 1; i < 5001; i++) {
        for (j = 1; j < 5001; j++) {
            o[i][j] = (t[i - 1][j] + t[i + 1][j] + t[i][j - 1] + t[i][j + 1]) / 4;
        }
    }
}
double residual(double t[5002][5002], double o[5002][5002])
{
    int i, j;
    double worst = 0.0;
    for (i = 1; i < 5001; i++) {
        for (j = 1; j < 5001; j++) {
            double d = fabs(o[i][j] - t[i][j]);
            if (d > worst) {
                worst = d;
            }
        }
    }
    return worst;
}
int main()
{
    double theDiffNorm = 1;
    double RefDiffNorm = 0;
    int iterations = 99;
    int index, i, j;
    double diffsum;
    init(myTable, myTableOut);
    for (index = 0; index < iterations; index++) {
        sweep(myTable, myTableOut);
        RefDiffNorm = residual(myTable, myTableOut);
        sweep(myTableOut, myTable);
    }
    sweep(myTable, myTableOut);
    diffsum = 0.0;
#pragma omp parallel for reduction(+:diffsum) shared(myTable) check
    for (i = 1; i < (1 + 5000 + 1) - 1; i++) {
        for (j = 1; j < (1 + 5000 + 1) - 1; j++) {
            double diff = myTableOut[i][j] - myTable[i][j];
            double diffmul = diff * diff;
            diffsum += diffmul;
            myTable[i][j] = myTableOut[i][j];
        }
    }
    theDiffNorm = diffsum;
    displayRegion(myTable);
    printf("theDiffNorm:%.12g RefDiffNorm:%.12g\n", theDiffNorm, RefDiffNorm);
    return 0;
}
