#include "amolf/cost.hpp"

#include <limits>
#include <stdexcept>

namespace amolf {

namespace {

__extension__ typedef __int128 Wide;

// Every formula is evaluated as an exact multiple of 1/6, then rounded to the
// nearest integer (halves away from zero).
MultCount round_sixths(Wide sixths) {
  const Wide q = (sixths + 3) / 6;
  if (q > std::numeric_limits<MultCount>::max()) throw std::overflow_error("multiply count overflow");
  return static_cast<MultCount>(q);
}

MultCount to_count(Wide v) {
  if (v > std::numeric_limits<MultCount>::max()) throw std::overflow_error("multiply count overflow");
  return static_cast<MultCount>(v);
}

void require_positive(std::int64_t v, const char* name) {
  if (v < 1) throw std::invalid_argument(std::string("multiply count: ") + name + " must be >= 1");
}

void require_sizes(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv) {
  require_positive(n, "N");
  require_positive(nh, "Nh");
  require_positive(m, "M");
  require_positive(nv, "Nv");
}

// 6 * Nu(Nu+1)[M + (2Nu+1)/6 + 3/2 + extra_halves/2]
Wide ols_sixths(Wide nu, Wide m, Wide extra_halves) {
  return nu * (nu + 1) * (6 * m + 2 * nu + 1 + 9 + 3 * extra_halves);
}

// 6 * L(L+1)[(2L+1)/6 + 5/2 + extra_halves/2]; the compressed-Hessian solve.
Wide small_solve_sixths(Wide l, Wide extra_halves) {
  return l * (l + 1) * (2 * l + 1 + 15 + 3 * extra_halves);
}

}  // namespace

MultCount mult_ols(std::int64_t nu, std::int64_t m) {
  if (nu < 0 || m < 0) throw std::invalid_argument("multiply count: negative size");
  return round_sixths(ols_sixths(nu, m, 0));
}

MultCount mult_owo_bp(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv) {
  require_sizes(n, nh, m, nv);
  const Wide nu = n + nh + 1;
  return round_sixths(ols_sixths(nu, m, nv) +
                      6 * Wide(nv) * (Wide(nh) * (m + 2 * n + 3) + Wide(m) * (2 * nu + 1)));
}

MultCount mult_lm(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv) {
  require_sizes(n, nh, m, nv);
  const Wide nu = n + nh + 1;
  const Wide n1 = n + 1;
  const Wide nw = m * nu + n1 * nh;
  const Wide per_pattern = m * nu + 2 * nh * n1 + Wide(m) * (n + 6 * nh + 4) +
                           m * nu * (nu + 3 * nh * n1) + 4 * Wide(nh) * nh * n1 * n1;
  return to_count(nv * per_pattern + nw * nw * nw + nw * nw);
}

MultCount mult_newton(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv) {
  require_sizes(n, nh, m, nv);
  const Wide niw = Wide(nh) * (n + 1);
  const Wide inner = 6 * niw * (2 * m + 1) + niw * (niw + 1) * (3 * Wide(nv) * m + 2 * niw + 1 + 15);
  return round_sixths(Wide(nv) * inner);
}

MultCount mult_owo(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv) {
  require_sizes(n, nh, m, nv);
  const Wide nu = n + nh + 1;
  return round_sixths(6 * Wide(nv) * (Wide(nh) * (n + 1) + Wide(m) * (2 * nu + 1)) +
                      ols_sixths(nu, m, nv));
}

MultCount mult_owo_newton(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv) {
  return mult_owo(n, nh, m, nv) + mult_newton(n, nh, m, nv);
}

MultCount mult_owo_molf(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv) {
  require_sizes(n, nh, m, nv);
  return round_sixths(small_solve_sixths(nh, 0) +
                      Wide(nv) * nh * (12 * Wide(m) + 6 * n + 12 + 3 * Wide(m) * (nh + 1)));
}

MultCount mult_amolf(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv,
                     std::int64_t ng) {
  require_sizes(n, nh, m, nv);
  require_positive(ng, "Ng");
  const Wide nl = Wide(ng) * nh;
  return round_sixths(small_solve_sixths(nl, Wide(m) * nv) +
                      6 * (Wide(nh) * (n + 1) + Wide(nh) * ng * m * (nv + 2) + nl * nv * m));
}

MultCount mult_cg(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv) {
  require_sizes(n, nh, m, nv);
  const Wide nu = n + nh + 1;
  const Wide nw = Wide(m) * nu + Wide(n + 1) * nh;
  const Wide gradient = Wide(nv) * (Wide(nh) * (m + 2 * n + 3) + Wide(m) * (2 * nu + 1));
  const Wide curvature = Wide(nv) * (Wide(nh) * (n + 2) + Wide(m) * (n + 2 * nh + 2));
  return to_count(gradient + curvature + 4 * nw);
}

MultCount mult_group_search(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv,
                            std::int64_t max_groups) {
  require_sizes(n, nh, m, nv);
  require_positive(max_groups, "max_groups");
  const Wide niw = Wide(nh) * (n + 1);
  const Wide nu = n + nh + 1;
  const Wide hessian =
      6 * (Wide(nv) * niw + Wide(nh) * nh * m + niw * (niw + 1)) + 3 * Wide(nv) * niw * (niw + 1);
  Wide candidates = 0;
  for (Wide ng = 1; ng <= max_groups; ++ng) {
    const Wide l = ng * nh;
    const Wide assemble = 2 * niw * niw + niw;
    const Wide step = niw;
    const Wide evaluate = Wide(nv) * (niw + m * nu + m);
    candidates += 6 * (assemble + step + evaluate) + small_solve_sixths(l, 0);
  }
  return round_sixths(hessian + candidates);
}

double epm(double e_prev, double e_now, MultCount m_it) {
  if (m_it <= 0) throw std::invalid_argument("epm: multiply count must be positive");
  return (e_prev - e_now) / static_cast<double>(m_it);
}

void CostLedger::add(MultCount multiplies) {
  if (multiplies <= 0) throw std::invalid_argument("CostLedger: iteration cost must be positive");
  per_iteration_.push_back(multiplies);
  cumulative_.push_back(total() + multiplies);
}

}  // namespace amolf
