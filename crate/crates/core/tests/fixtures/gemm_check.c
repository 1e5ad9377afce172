int main() {
    int row = 64, col = 64, i, j, k, a; int result[row][col]; int array[row * col]; int mat[row][col], mat1[row][col], mat2[row][col];
#pragma omp parallel for check
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
    return 0;
}
