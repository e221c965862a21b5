#pragma once

#include "entk/rng.hpp"
#include "entk/types.hpp"

#include <cmath>

namespace entk {

struct DatasetSpec {
    int P = 10;
    int D = 50;
    std::uint64_t seed = 0;
    bool unit_norm = true;   // scale rows so |x|^2 = D (K^x has unit diagonal)
    bool whitened = false;   // orthogonalize rows so K^x = I (requires P <= D)
};

// i.i.d. N(0,1) inputs with optional unit-norm / whitening; balanced +-1
// targets with a seed-deterministic shuffle.
inline Dataset make_dataset(const DatasetSpec& spec) {
    if (spec.P < 1 || spec.D < 1) throw DomainError("make_dataset: P,D >= 1 required");
    if (spec.whitened && spec.P > spec.D)
        throw DomainError("make_dataset: whitening impossible for P > D");

    RngStream rng = RngStream(spec.seed).child(0x6461746173657431ull);
    Mat X = rng.normal_mat(spec.P, spec.D);

    if (spec.whitened) {
        // Orthonormalize rows, then scale by sqrt(D) so X X^T / D = I.
        Eigen::HouseholderQR<Mat> qr(X.transpose());
        Mat Q = qr.householderQ() * Mat::Identity(spec.D, spec.P);
        X = std::sqrt(static_cast<double>(spec.D)) * Q.transpose();
    } else if (spec.unit_norm) {
        for (int mu = 0; mu < spec.P; ++mu)
            X.row(mu) *= std::sqrt(static_cast<double>(spec.D)) / X.row(mu).norm();
    }

    Vec y(spec.P);
    for (int mu = 0; mu < spec.P; ++mu) y(mu) = (mu % 2 == 0) ? 1.0 : -1.0;
    // Fisher-Yates with the stream's uniforms keeps the balance.
    for (int mu = spec.P - 1; mu > 0; --mu) {
        const int j = static_cast<int>(rng.uniform() * (mu + 1));
        std::swap(y(mu), y(std::min(j, mu)));
    }
    return Dataset(std::move(X), std::move(y), spec.whitened);
}

// Two unit-norm inputs separated by angle theta: K^x = [[1, cos t],[cos t, 1]].
inline Dataset make_angle_pair(double theta, int D = 8) {
    if (D < 2) throw DomainError("make_angle_pair: D >= 2 required");
    Mat X = Mat::Zero(2, D);
    const double s = std::sqrt(static_cast<double>(D));
    X(0, 0) = s;
    X(1, 0) = s * std::cos(theta);
    X(1, 1) = s * std::sin(theta);
    Vec y(2);
    y << 1.0, -1.0;
    return Dataset(std::move(X), std::move(y), false);
}

}  // namespace entk
