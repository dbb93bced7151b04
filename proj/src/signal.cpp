#include "parafac/signal.hpp"

namespace parafac {

Signal gaussian_signal(int channels, int length, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> data(static_cast<std::size_t>(channels) * length);
  for (double& v : data) v = normal(rng);
  return Signal(channels, length, std::move(data));
}

MatrixSeq to_seq(const Signal& x) {
  std::vector<Eigen::MatrixXd> taps;
  taps.reserve(static_cast<std::size_t>(x.length()));
  for (int n = 0; n < x.length(); ++n) {
    taps.emplace_back(Eigen::Map<const Eigen::VectorXd>(x.sample(n), x.channels()));
  }
  return MatrixSeq::from_offset(x.channels(), 1, 0, std::move(taps));
}

}  // namespace parafac
