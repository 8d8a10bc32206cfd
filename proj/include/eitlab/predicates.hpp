#pragma once

// Robust geometric predicates. A floating-point evaluation is accepted when its
// magnitude exceeds a forward error bound; otherwise the determinant is
// re-evaluated exactly over the rationals, so the returned sign is always exact.

namespace eitlab::predicates {

/// Positive if (a, b, c) turn counterclockwise, negative if clockwise, zero if
/// collinear. The magnitude is twice the signed triangle area when the fast
/// path is taken; only the sign is guaranteed in general.
double orient2d(const double* a, const double* b, const double* c);

/// Positive if d lies strictly inside the circle through a, b, c (which must be
/// counterclockwise), negative if outside, zero if cocircular.
double incircle(const double* a, const double* b, const double* c, const double* d);

}  // namespace eitlab::predicates
