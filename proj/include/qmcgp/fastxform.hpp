#pragma once

#include <complex>
#include <vector>

namespace qmcgp {

using cdouble = std::complex<double>;

// Orthonormal fast transforms over length 2^m vectors. Each butterfly stage
// carries a 1/sqrt(2) factor, so all three maps are unitary.
//
// fwht      : scaled Walsh--Hadamard transform; real, symmetric, involutory.
// fftbr     : scaled DFT applied to the bit-reversed reordering of the input,
//             computed as a decimation-in-time FFT that skips the initial
//             reordering. Dense equivalent: (W^{i R(j)} / sqrt(n))_{ij} with
//             W = exp(-2 pi sqrt(-1) / n) and R the bit reversal.
// ifftbr    : inverse of fftbr.

void fwht(std::vector<double>& y);
void fwht(std::vector<cdouble>& y);
void fftbr(std::vector<cdouble>& y);
void ifftbr(std::vector<cdouble>& y);

// Batched application over `count` contiguous vectors of length n (= 2^m).
void fwht_batch(double* data, size_t n, size_t count);
void fftbr_batch(cdouble* data, size_t n, size_t count);
void ifftbr_batch(cdouble* data, size_t n, size_t count);

}  // namespace qmcgp
