#pragma once

#include <complex>
#include <vector>

#include "melvq/audio/wav.hpp"

namespace melvq::audio {

// Band-limited sample rate conversion (windowed-sinc interpolation).
Waveform resample(const Waveform& w, int target_rate);

// Removes leading/trailing frames whose RMS sits more than threshold_db below
// the loudest frame. Throws EmptySignalError when nothing survives.
Waveform trim_silence(const Waveform& w, double threshold_db);

// Phase-vocoder stretch to an exact duration; pitch is preserved.
Waveform time_stretch(const Waveform& w, double target_duration_s);

// Iterative radix-2 FFT over a power-of-two length; inverse divides by n.
void fft_inplace(std::vector<std::complex<double>>& buf, bool inverse);

// STFT of a signal with a Hann window, centered frames (reflect padding).
// Returns frames x (n_fft/2 + 1) complex bins.
std::vector<std::vector<std::complex<double>>> stft(const std::vector<double>& x, int n_fft,
                                                    int hop);

std::vector<double> hann_window(int n);

}  // namespace melvq::audio
