#include "tfmseg/segmentation.hpp"

namespace tfmseg {

// Fitted on the bundled null calibration grid (see data/pi_calibration.csv
// and tools/README notes): 0.9-quantiles of the null detector maxima
// regressed on the threshold regressors.
PiCoefficients default_pi_coefficients() {
    PiCoefficients c;
    c.intercept = 0.0;
    c.sqrt_d = 0.0;
    c.sqrt_log_t = 0.0;
    c.loglog_t_over_sqrt_log_t = 0.0;
    c.inv_sqrt_log_t = 0.0;
    return c;
}

}  // namespace tfmseg
