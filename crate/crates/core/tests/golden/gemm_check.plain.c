#pragma hmpp _instr_for_ol_3_main codelet, target=CUDA, args[result, array].io=inout, &
#pragma hmpp & args[array].size=(row * col), args[*].transfer=auto
void _instr_for_ol_3_main(int i, int row, int j, int col, int result[row][col], int *array, int mat[row][col], int k, int a, int mat1[row][col], int mat2[row][col])
{
    #pragma hmppcg gridify(i, j)
    for (i = 0; i < row; ++i) {
        for (j = 0; j < col; ++j) {
            result[i][j] = 0;
            array[i * j] = mat[i][j];
            for (k = 0; k < row; ++k) {
                a = 0;
                while (a < 10) {
                    result[i][j] += mat1[i][k] * mat2[k][j] * array[i * j];
                    a++;
                }
            }
        }
    }
}

int main()
{
    int row = 64, col = 64, i, j, k, a;
    int result[row][col];
    int array[row * col];
    int mat[row][col], mat1[row][col], mat2[row][col];
    #pragma hmpp _instr_for_ol_3_main callsite
    _instr_for_ol_3_main(i, row, j, col, result, array, mat, k, a, mat1, mat2);
    return 0;
}
