#include "resae/errors.hpp"
#include "resae/model_config.hpp"

namespace resae {

void EncoderConfig::validate() const {
  if (dim == 0) throw ConfigError("encoder dim must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError("encoder dropout must lie in [0, 1), got " + std::to_string(dropout));
  }
}

void DecoderConfig::validate(std::size_t dim) const {
  if (n_heads == 0 || dim % n_heads != 0) {
    throw ConfigError("decoder heads (" + std::to_string(n_heads) + ") must divide dim " +
                      std::to_string(dim));
  }
  if (hidden_dim == 0) throw ConfigError("decoder hidden_dim must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError("decoder dropout must lie in [0, 1), got " + std::to_string(dropout));
  }
  if (!(temperature_init > 0.0)) throw ConfigError("temperature_init must be positive");
}

}  // namespace resae
