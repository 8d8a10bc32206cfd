#include "eitlab/predicates.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>

namespace eitlab::predicates {
namespace {

using Rational = boost::multiprecision::cpp_rational;

// Shewchuk's first-stage error bounds for the plain floating-point evaluation.
constexpr double kEpsilon = 1.1102230246251565e-16;
constexpr double kOrientBound = (3.0 + 16.0 * kEpsilon) * kEpsilon;
constexpr double kIncircleBound = (10.0 + 96.0 * kEpsilon) * kEpsilon;

double sign_of(const Rational& r) { return static_cast<double>(r.sign()); }

double orient_exact(const double* a, const double* b, const double* c) {
    const Rational acx = Rational(a[0]) - Rational(c[0]);
    const Rational bcx = Rational(b[0]) - Rational(c[0]);
    const Rational acy = Rational(a[1]) - Rational(c[1]);
    const Rational bcy = Rational(b[1]) - Rational(c[1]);
    return sign_of(acx * bcy - acy * bcx);
}

double incircle_exact(const double* a, const double* b, const double* c, const double* d) {
    const Rational adx = Rational(a[0]) - Rational(d[0]);
    const Rational ady = Rational(a[1]) - Rational(d[1]);
    const Rational bdx = Rational(b[0]) - Rational(d[0]);
    const Rational bdy = Rational(b[1]) - Rational(d[1]);
    const Rational cdx = Rational(c[0]) - Rational(d[0]);
    const Rational cdy = Rational(c[1]) - Rational(d[1]);
    const Rational alift = adx * adx + ady * ady;
    const Rational blift = bdx * bdx + bdy * bdy;
    const Rational clift = cdx * cdx + cdy * cdy;
    const Rational det = alift * (bdx * cdy - bdy * cdx) + blift * (cdx * ady - cdy * adx) +
                         clift * (adx * bdy - ady * bdx);
    return sign_of(det);
}

}  // namespace

double orient2d(const double* a, const double* b, const double* c) {
    const double detleft = (a[0] - c[0]) * (b[1] - c[1]);
    const double detright = (a[1] - c[1]) * (b[0] - c[0]);
    const double det = detleft - detright;
    const double detsum = std::fabs(detleft) + std::fabs(detright);
    if (std::fabs(det) > kOrientBound * detsum) return det;
    return orient_exact(a, b, c);
}

double incircle(const double* a, const double* b, const double* c, const double* d) {
    const double adx = a[0] - d[0], ady = a[1] - d[1];
    const double bdx = b[0] - d[0], bdy = b[1] - d[1];
    const double cdx = c[0] - d[0], cdy = c[1] - d[1];

    const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
    const double cdxady = cdx * ady, adxcdy = adx * cdy;
    const double adxbdy = adx * bdy, bdxady = bdx * ady;
    const double alift = adx * adx + ady * ady;
    const double blift = bdx * bdx + bdy * bdy;
    const double clift = cdx * cdx + cdy * cdy;

    const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
    const double permanent = (std::fabs(bdxcdy) + std::fabs(cdxbdy)) * alift +
                             (std::fabs(cdxady) + std::fabs(adxcdy)) * blift +
                             (std::fabs(adxbdy) + std::fabs(bdxady)) * clift;
    if (std::fabs(det) > kIncircleBound * permanent) return det;
    return incircle_exact(a, b, c, d);
}

}  // namespace eitlab::predicates
