#include <stdio.h>
#include <math.h>
double myTable[5002][5002], myTableOut[5002][5002];
int main() {
    int index = 0;
    double theDiffNorm = 1, RefDiffNorm = 0;
    int iterations = 99;
    int i, j, o, a;
    double diffsum, diff, diffmul;
    init(myTable, myTableOut);
    for (index = 0; (index < iterations); index++) {
#pragma omp parallel for shared(myTableOut) check
        for (i = 1; i < (1 + 5000 + 1) - 1; i++) {
            for (j = 1; j < (1 + 5000 + 1) - 1; j++) { double neighbor = cos(myTable[i - 1][j]) + sin(myTable[i][j - 1]) + sin(myTable[i][j + 1]) + cos(myTable[i + 1][j]); myTableOut[i][j] = neighbor / 3; }
        }
        theDiffNorm = 0.0; diffsum = theDiffNorm;
#pragma omp parallel for reduction(+:diffsum) shared(myTable) check
        for (i = 1; i < (1 + 5000 + 1) - 1; i++) {
            for (j = 1; j < (1 + 5000 + 1) - 1; j++) {
                diff = myTableOut[i][j] - myTable[i][j];
                diffmul = diff * diff;
                diffsum += diffmul;
                myTable[i][j] = myTableOut[i][j];
            }
        }
        theDiffNorm = diffsum;
    }
    displayRegion(myTable);
    printf("theDiffNorm:%.12g RefDiffNorm:%.12g", theDiffNorm, RefDiffNorm);
    return 0;
}
