#pragma once

// Training objectives. Every loss is per-item normalized and then averaged
// over the batch; with per-item normalization by the item size both steps
// collapse to a mean over all elements.

#include <string>

#include "audiosr/autodiff.hpp"

namespace audiosr {

// Floor applied inside every log of a probability.
constexpr double kLogClamp = 1e-12;

struct LossWeights {
    double lambda_f = 1.0;
    double lambda_adv = 0.001;
};

// Sample-space loss: (1/W) sum_i (x_h,i - g_i)^2, batch-meaned.
template <class T>
Var<T> l2_loss(Var<T> x_h, Var<T> g_out) {
    detail::require(x_h.shape() == g_out.shape(), "l2_loss: shapes " + to_string(x_h.shape()) + " and " +
                                                      to_string(g_out.shape()) + " disagree");
    return mean_all(square(sub(x_h, g_out)));
}

// Feature loss: (1/(C_f W_f)) sum_c sum_i (phi_h - phi_g)^2, batch-meaned.
template <class T>
Var<T> feature_loss(Var<T> phi_h, Var<T> phi_g) {
    detail::require(phi_h.shape() == phi_g.shape(), "feature_loss: shapes " + to_string(phi_h.shape()) + " and " +
                                                        to_string(phi_g.shape()) + " disagree");
    return mean_all(square(sub(phi_h, phi_g)));
}

// Non-saturating generator loss: mean of -log D(G(x_l)).
template <class T>
Var<T> adversarial_loss_g(Var<T> d_of_g) {
    return mul_scalar(mean_all(log(clamp_min(d_of_g, kLogClamp))), -1.0);
}

// L2 + lambda_f * feature + lambda_adv * adversarial. Empty Vars drop their
// term, which is how the training modes gate the objective.
template <class T>
Var<T> combine_generator_loss(Var<T> l2, Var<T> feature, Var<T> adversarial, const LossWeights& w) {
    Var<T> total = l2;
    if (feature.valid()) total = add(total, mul_scalar(feature, w.lambda_f));
    if (adversarial.valid()) total = add(total, mul_scalar(adversarial, w.lambda_adv));
    return total;
}

template <class T>
struct GeneratorLoss {
    Var<T> total;
    Var<T> l2;
    Var<T> feature;
    Var<T> adversarial;
};

template <class T>
GeneratorLoss<T> generator_loss(Var<T> x_h, Var<T> g_out, Var<T> phi_h, Var<T> phi_g, Var<T> d_of_g,
                                const LossWeights& w) {
    GeneratorLoss<T> out;
    out.l2 = l2_loss(x_h, g_out);
    if (phi_h.valid() && phi_g.valid()) out.feature = feature_loss(phi_h, phi_g);
    if (d_of_g.valid()) out.adversarial = adversarial_loss_g(d_of_g);
    out.total = combine_generator_loss(out.l2, out.feature, out.adversarial, w);
    return out;
}

// Batch mean of -log D(x_h) - log(1 - D(G(x_l))). The fake branch must be
// computed from a detached generator output.
template <class T>
Var<T> discriminator_loss(Var<T> d_real, Var<T> d_fake) {
    detail::require(d_real.shape() == d_fake.shape(), "discriminator_loss: real/fake shapes disagree");
    Var<T> real_term = mean_all(log(clamp_min(d_real, kLogClamp)));
    Var<T> fake_term = mean_all(log(clamp_min(add_scalar(mul_scalar(d_fake, -1.0), 1.0), kLogClamp)));
    return mul_scalar(add(real_term, fake_term), -1.0);
}

}  // namespace audiosr
