#include <stdio.h>
#include <math.h>
double myTable[5002][5002], myTableOut[5002][5002];

#pragma hmpp <group0_12> _instr_for12_ol_12_main codelet, args[myTable, myTableOut].io=in
void _instr_for12_ol_12_main(int i, int j, double myTable[5002][5002], double myTableOut[5002][5002])
{
    #pragma hmppcg gridify(i, j)
    for (i = 1; i < (1 + 5000 + 1) - 1; i++) {
        for (j = 1; j < (1 + 5000 + 1) - 1; j++) {
            double neighbor = cos(myTable[i - 1][j]) + sin(myTable[i][j - 1]) + sin(myTable[i][j + 1]) + cos(myTable[i + 1][j]);
            myTableOut[i][j] = neighbor / 3;
        }
    }
}

#pragma hmpp <group0_12> _instr_for12_ol_17_main codelet, args[myTableOut, myTable].io=in, &
#pragma hmpp & args[diffsum_reduced].size=1
void _instr_for12_ol_17_main(int i, int j, double diff, double myTableOut[5002][5002], double myTable[5002][5002], double diffmul, double *diffsum_reduced)
{
    double diffsum = *diffsum_reduced;
    #pragma hmppcg gridify(1, j), reduce(+:diffsum)
    for (i = 1; i < (1 + 5000 + 1) - 1; i++) {
        for (j = 1; j < (1 + 5000 + 1) - 1; j++) {
            diff = myTableOut[i][j] - myTable[i][j];
            diffmul = diff * diff;
            diffsum += diffmul;
            myTable[i][j] = myTableOut[i][j];
        }
    }
    *diffsum_reduced = diffsum;
}

int main()
{
    #pragma hmpp <group0_12> group, target=CUDA
    #pragma hmpp <group0_12> mapbyname, myTable, myTableOut
    int index = 0;
    double theDiffNorm = 1, RefDiffNorm = 0;
    int iterations = 99;
    int i, j, o, a;
    double diffsum, diff, diffmul;
    init(myTable, myTableOut);
    #pragma hmpp <group0_12> _instr_for12_ol_12_main advancedload, args[myTable, myTableOut], args[myTable].addr="myTable", args[myTableOut].addr="myTableOut"
    for (index = 0; (index < iterations); index++) {
        #pragma hmpp <group0_12> _instr_for12_ol_12_main callsite, args[myTable, myTableOut].noupdate=true
        _instr_for12_ol_12_main(i, j, myTable, myTableOut);
        theDiffNorm = 0.0;
        diffsum = theDiffNorm;
        #pragma hmpp <group0_12> _instr_for12_ol_17_main callsite, args[myTableOut, myTable].noupdate=true
        _instr_for12_ol_17_main(i, j, diff, myTableOut, myTable, diffmul, &diffsum);
        theDiffNorm = diffsum;
    }
    #pragma hmpp <group0_12> _instr_for12_ol_17_main delegatedstore, args[myTable], args[myTable].addr="myTable"
    displayRegion(myTable);
    #pragma hmpp <group0_12> release
    printf("theDiffNorm:%.12g RefDiffNorm:%.12g", theDiffNorm, RefDiffNorm);
    return 0;
}
