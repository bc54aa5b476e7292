#include "lsopt/genmodel.hpp"

#include <cmath>

#include <fmt/format.h>

#include "lsopt/rng.hpp"

namespace lsopt {

ModelKind parse_model_kind(std::string_view name) {
  if (name == "continuous_identity") return ModelKind::ContinuousIdentity;
  if (name == "bitstring_threshold") return ModelKind::BitstringThreshold;
  if (name == "external") return ModelKind::External;
  throw ConfigError(fmt::format("unknown model kind '{}'", name));
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ContinuousIdentity: return "continuous_identity";
    case ModelKind::BitstringThreshold: return "bitstring_threshold";
    case ModelKind::External: return "external";
  }
  return "unknown";
}

void GenerativeModelSpec::validate() const {
  if (dim < 1) throw ConfigError("model dim must be >= 1");
  if (!(bit_scale > 0.0) || !std::isfinite(bit_scale)) {
    throw ConfigError("model bit_scale must be a positive finite number");
  }
  if (kind == ModelKind::External && !endpoint) {
    throw ConfigError("external model requires an endpoint");
  }
}

Domain GenerativeModelSpec::domain() const {
  switch (kind) {
    case ModelKind::ContinuousIdentity: return Domain::RealVector;
    case ModelKind::BitstringThreshold: return Domain::BitString;
    case ModelKind::External: return Domain::Token;
  }
  return Domain::Token;
}

GenerativeModel::GenerativeModel(GenerativeModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
}

void GenerativeModel::check_latent(const LatentVector& z) const {
  if (z.size() != spec_.dim) {
    throw InvalidInput(
        fmt::format("latent has dimension {}, model expects {}", z.size(), spec_.dim));
  }
  for (double v : z.values) {
    if (!std::isfinite(v)) throw InvalidInput("latent entries must be finite");
  }
}

std::vector<LatentVector> GenerativeModel::encode_batch(std::span<const Candidate> candidates) const {
  std::vector<LatentVector> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(encode(c));
  return out;
}

std::vector<Candidate> GenerativeModel::decode_batch(std::span<const LatentVector> latents) const {
  std::vector<Candidate> out;
  out.reserve(latents.size());
  for (const auto& z : latents) out.push_back(decode(z));
  return out;
}

// ---------------------------------------------------------------------------

ContinuousIdentityModel::ContinuousIdentityModel(GenerativeModelSpec spec)
    : GenerativeModel(std::move(spec)) {}

LatentVector ContinuousIdentityModel::encode(const Candidate& candidate) const {
  if (candidate.domain() != Domain::RealVector) {
    throw InvalidInput("continuous_identity model encodes real_vector candidates only");
  }
  const auto values = candidate.reals();
  if (values.size() != dim()) {
    throw InvalidInput(
        fmt::format("candidate has dimension {}, model expects {}", values.size(), dim()));
  }
  return {{values.begin(), values.end()}};
}

Candidate ContinuousIdentityModel::decode(const LatentVector& z) const {
  check_latent(z);
  return Candidate::real_vector(z.values);
}

// ---------------------------------------------------------------------------

BitstringThresholdModel::BitstringThresholdModel(GenerativeModelSpec spec)
    : GenerativeModel(std::move(spec)) {}

LatentVector BitstringThresholdModel::encode(const Candidate& candidate) const {
  if (candidate.domain() != Domain::BitString) {
    throw InvalidInput("bitstring_threshold model encodes bitstring candidates only");
  }
  const auto bits = candidate.bits();
  if (bits.size() != dim()) {
    throw InvalidInput(
        fmt::format("candidate has length {}, model expects {}", bits.size(), dim()));
  }
  const double c = spec().bit_scale;
  LatentVector z;
  z.values.reserve(bits.size());
  for (auto b : bits) z.values.push_back(b ? c : -c);
  return z;
}

Candidate BitstringThresholdModel::decode(const LatentVector& z) const {
  check_latent(z);
  std::vector<std::uint8_t> bits;
  bits.reserve(z.size());
  for (double v : z.values) bits.push_back(v > 0.0 ? 1 : 0);
  return Candidate::bitstring(std::move(bits));
}

// ---------------------------------------------------------------------------

ExternalModel::ExternalModel(GenerativeModelSpec spec,
                             std::shared_ptr<protocol::WireClient> client)
    : GenerativeModel(std::move(spec)), client_(std::move(client)) {
  if (!client_) throw InvalidInput("external model needs a wire client");
}

LatentVector ExternalModel::encode(const Candidate& candidate) const {
  return encode_batch(std::span(&candidate, 1)).front();
}

Candidate ExternalModel::decode(const LatentVector& z) const {
  return decode_batch(std::span(&z, 1)).front();
}

std::vector<LatentVector> ExternalModel::encode_batch(std::span<const Candidate> candidates) const {
  std::vector<std::string> tokens;
  tokens.reserve(candidates.size());
  for (const auto& c : candidates) tokens.push_back(c.token_text());
  auto rows = client_->encode(tokens);
  std::vector<LatentVector> out;
  out.reserve(rows.size());
  for (auto& r : rows) {
    LatentVector z{std::move(r)};
    check_latent(z);
    out.push_back(std::move(z));
  }
  return out;
}

std::vector<Candidate> ExternalModel::decode_batch(std::span<const LatentVector> latents) const {
  std::vector<std::vector<double>> rows;
  rows.reserve(latents.size());
  for (const auto& z : latents) {
    check_latent(z);
    rows.push_back(z.values);
  }
  auto decoded = client_->decode(rows);
  std::vector<Candidate> out;
  out.reserve(decoded.candidates.size());
  for (std::size_t i = 0; i < decoded.candidates.size(); ++i) {
    out.push_back(Candidate::token(std::move(decoded.candidates[i]),
                                   Fingerprint(std::move(decoded.fingerprints[i]))));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<GenerativeModel> make_model(const GenerativeModelSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ModelKind::ContinuousIdentity: return std::make_unique<ContinuousIdentityModel>(spec);
    case ModelKind::BitstringThreshold: return std::make_unique<BitstringThresholdModel>(spec);
    case ModelKind::External: {
      auto client = std::make_shared<protocol::WireClient>(
          protocol::open_transport(*spec.endpoint), spec.endpoint->timeout);
      client->handshake();
      return std::make_unique<ExternalModel>(spec, std::move(client));
    }
  }
  throw ConfigError("unknown model kind");
}

LatentVector encode(const GenerativeModel& model, const Candidate& candidate) {
  return model.encode(candidate);
}

Candidate decode(const GenerativeModel& model, const LatentVector& z) { return model.decode(z); }

std::vector<LatentVector> sample_prior(const GenerativeModelSpec& spec, std::size_t n,
                                       std::uint64_t seed) {
  std::vector<LatentVector> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    CounterStream stream{seed, static_cast<std::uint64_t>(StreamTag::Prior), k};
    out[k].values.resize(spec.dim);
    stream.fill_normal(out[k].values);
  }
  return out;
}

}  // namespace lsopt
