#include "pamcts/mdp.hpp"

namespace pamcts {

double discounted_return(std::span<const double> rewards, double gamma) {
    double total = 0.0;
    double weight = 1.0;
    for (double r : rewards) {
        total += weight * r;
        weight *= gamma;
    }
    return total;
}

}  // namespace pamcts
