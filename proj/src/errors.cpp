#include "smot/errors.hpp"

namespace smot {

namespace {
double g_order_tol = 1e-9;
}

double order_tol() { return g_order_tol; }

void set_order_tol(double tol) {
  if (!(tol > 0)) throw DomainError("tolerance must be positive");
  g_order_tol = tol;
}

}  // namespace smot
