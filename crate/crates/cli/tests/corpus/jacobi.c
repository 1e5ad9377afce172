#include <stdio.h>
#include <math.h>
double myTable[128][128], myTableOut[128][128];
void init(double t[128][128], double o[128][128])
{
    int i, j;
    for (i = 0; i < 128; i++) {
        for (j = 0; j < 128; j++) {
            t[i][j] = (i * 7 + j * 3) % 11;
            o[i][j] = 0.0;
        }
    }
}
void displayRegion(double t[128][128])
{
    int i, j;
    double sum = 0.0;
    for (i = 0; i < 128; i++) {
        for (j = 0; j < 128; j++) {
            sum += t[i][j] * (i + 1);
        }
    }
    printf("region:%.17g\n", sum);
}
int main() {
    int index = 0;
    double theDiffNorm = 1, RefDiffNorm = 0;
    int iterations = 10;
    int i, j;
    double diffsum, diff, diffmul;
    init(myTable, myTableOut);
    for (index = 0; (index < iterations); index++) {
#pragma omp parallel for shared(myTableOut) fixed(11,3,0)
        for (i = 1; i < (1 + 126 + 1) - 1; i++) {
            for (j = 1; j < (1 + 126 + 1) - 1; j++) {
                double neighbor = cos(myTable[i - 1][j]) + sin(myTable[i][j - 1]) + sin(myTable[i][j + 1]) + cos(myTable[i + 1][j]);
                myTableOut[i][j] = neighbor / 3;
            }
        }
        theDiffNorm = 0.0;
        diffsum = theDiffNorm;
#pragma omp parallel for reduction(+:diffsum) shared(myTable) check
        for (i = 1; i < (1 + 126 + 1) - 1; i++) {
            for (j = 1; j < (1 + 126 + 1) - 1; j++) {
                diff = myTableOut[i][j] - myTable[i][j];
                diffmul = diff * diff;
                diffsum += diffmul;
                myTable[i][j] = myTableOut[i][j];
            }
        }
        theDiffNorm = diffsum;
        RefDiffNorm = RefDiffNorm + theDiffNorm;
    }
    displayRegion(myTable);
    printf("theDiffNorm:%.17g RefDiffNorm:%.17g\n", theDiffNorm, RefDiffNorm);
    return 0;
}
