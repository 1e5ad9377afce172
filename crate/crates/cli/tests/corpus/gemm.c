#include <stdio.h>
int main() {
    int row = 64, col = 64, i, j, k, a; int result[row][col]; int array[row * col]; int mat[row][col], mat1[row][col], mat2[row][col];
    for (i = 0; i < row; ++i) {
        for (j = 0; j < col; ++j) {
            mat[i][j] = (i + j) % 7;
            mat1[i][j] = (i * j) % 5;
            mat2[i][j] = (i + 2 * j) % 3;
        }
    }
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
    double sum = 0;
    for (i = 0; i < row; ++i) {
        for (j = 0; j < col; ++j) {
            sum += result[i][j] * (i + 1) + j;
        }
    }
    printf("%.0f\n", sum);
    return 0;
}
