#include "scrabble/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include "scrabble/kernels.hpp"

namespace scrabble {

Adam::Adam(const std::vector<Param*>& params, AdamSettings settings)
    : settings_(settings) {
  for (Param* p : params) {
    m_.emplace_back(p->name + ".adam_m", p->shape);
    v_.emplace_back(p->name + ".adam_v", p->shape);
  }
}

void Adam::step(const std::vector<Param*>& params) {
  if (params.size() != m_.size()) throw std::invalid_argument("Adam::step: parameter list changed");
  ++t_;
  const auto& kt = kernels::active();
  kernels::AdamCoeffs c{settings_.lr,
                        settings_.beta1,
                        settings_.beta2,
                        settings_.eps,
                        1.0 - std::pow(settings_.beta1, static_cast<double>(t_)),
                        1.0 - std::pow(settings_.beta2, static_cast<double>(t_))};
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param* p = params[i];
    if (p->size() != m_[i].size()) throw std::invalid_argument("Adam::step: size mismatch for " + p->name);
    kt.adam(p->size(), c, p->value.data(), p->grad.data(), m_[i].value.data(), v_[i].value.data());
  }
}

std::vector<Param*> Adam::slots() {
  std::vector<Param*> out;
  for (auto& m : m_) out.push_back(&m);
  for (auto& v : v_) out.push_back(&v);
  return out;
}

std::vector<const Param*> Adam::slots() const {
  std::vector<const Param*> out;
  for (const auto& m : m_) out.push_back(&m);
  for (const auto& v : v_) out.push_back(&v);
  return out;
}

}  // namespace scrabble
