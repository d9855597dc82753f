#pragma once

#include <cmath>
#include <stdexcept>

namespace rkde {

// Smoothness-class and clipping parameters shared by the estimator and the
// error bounds: densities are (beta, L)-Holder in the l^r norm and bounded
// into [kappa1, kappa2].
struct HolderParams {
  double beta = 2.0;    // smoothness order, > 0
  double L = 1.0;       // Holder constant, > 0
  double r = 2.0;       // exponent of the norm on increments, >= 1
  double kappa1 = 0.0;  // lower density clip, > 0
  double kappa2 = 0.0;  // upper density clip, >= kappa1

  // Greatest integer strictly smaller than beta.
  int ell() const { return static_cast<int>(std::ceil(beta)) - 1; }

  void validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("holder: beta must be > 0");
    if (!(L > 0.0)) throw std::invalid_argument("holder: L must be > 0");
    if (!(r >= 1.0)) throw std::invalid_argument("holder: r must be >= 1");
    if (!(kappa1 > 0.0)) throw std::invalid_argument("holder: kappa1 must be > 0");
    if (!(kappa2 >= kappa1)) throw std::invalid_argument("holder: kappa2 must be >= kappa1");
  }
};

}  // namespace rkde
