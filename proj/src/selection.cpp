#include "vaemi/selection.hpp"

#include <numbers>

namespace vaemi {

BoundResult mse_lower_bound(double entropy_x, double mi) {
    if (!(mi >= 0.0)) throw std::invalid_argument("mse_lower_bound: mutual information must be >= 0");
    if (!std::isfinite(entropy_x)) throw std::invalid_argument("mse_lower_bound: entropy must be finite");
    BoundResult b{BoundKind::Mse};
    b.entropy = entropy_x;
    b.mi = mi;
    b.value = std::exp(2.0 * (entropy_x - mi)) / (2.0 * std::numbers::pi * std::numbers::e);
    return b;
}

BoundResult fano_bound(double label_entropy, int num_classes, double mi) {
    if (!(mi >= 0.0)) throw std::invalid_argument("fano_bound: mutual information must be >= 0");
    if (!(label_entropy >= 0.0)) throw std::invalid_argument("fano_bound: label entropy must be >= 0");
    if (num_classes < 2) throw std::invalid_argument("fano_bound: need at least two classes");
    BoundResult b{BoundKind::Fano};
    b.entropy = label_entropy;
    b.mi = mi;
    b.num_classes = num_classes;
    b.value = std::max(0.0, (label_entropy - mi - 1.0) / std::log(static_cast<double>(num_classes)));
    return b;
}

}  // namespace vaemi
