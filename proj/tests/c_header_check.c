/* Compiled as C to keep the public header C-clean. */

#include "surerag/surerag.h"

int c_header_decide(double p_support, double u, double beta, double tau) {
    const double pi[3] = {p_support, (1.0 - p_support) / 2.0, (1.0 - p_support) / 2.0};
    sr_decision d;
    if (sr_decide(pi, u, beta, tau, &d) != SR_OK) return -1;
    return d.answer;
}
