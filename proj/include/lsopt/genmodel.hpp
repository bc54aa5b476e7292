#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lsopt/core.hpp"
#include "lsopt/protocol.hpp"

namespace lsopt {

struct LatentVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const LatentVector&, const LatentVector&) = default;
};

enum class ModelKind { ContinuousIdentity, BitstringThreshold, External };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);

struct GenerativeModelSpec {
  ModelKind kind = ModelKind::BitstringThreshold;
  std::size_t dim = 1;
  /// Latent magnitude of a bit in the bitstring model.
  double bit_scale = 1.0;
  /// Required for ModelKind::External.
  std::optional<protocol::EndpointAddress> endpoint;

  void validate() const;
  /// Observation domain produced by decode.
  Domain domain() const;
};

/// Encoder/decoder pair between observation space and latent space.
class GenerativeModel {
 public:
  virtual ~GenerativeModel() = default;

  const GenerativeModelSpec& spec() const { return spec_; }
  std::size_t dim() const { return spec_.dim; }

  virtual LatentVector encode(const Candidate& candidate) const = 0;
  virtual Candidate decode(const LatentVector& z) const = 0;

  // Batched forms; external models send one request per batch.
  virtual std::vector<LatentVector> encode_batch(std::span<const Candidate> candidates) const;
  virtual std::vector<Candidate> decode_batch(std::span<const LatentVector> latents) const;

 protected:
  explicit GenerativeModel(GenerativeModelSpec spec);
  void check_latent(const LatentVector& z) const;

 private:
  GenerativeModelSpec spec_;
};

/// Identity map between RealVector candidates and latents.
class ContinuousIdentityModel final : public GenerativeModel {
 public:
  explicit ContinuousIdentityModel(GenerativeModelSpec spec);
  LatentVector encode(const Candidate& candidate) const override;
  Candidate decode(const LatentVector& z) const override;
};

/// Bit i encodes to +c or -c; a latent decodes to bit 1 iff z_i > 0.
class BitstringThresholdModel final : public GenerativeModel {
 public:
  explicit BitstringThresholdModel(GenerativeModelSpec spec);
  LatentVector encode(const Candidate& candidate) const override;
  Candidate decode(const LatentVector& z) const override;
};

/// Delegates to a generative back-end over the wire protocol. Decoded tokens
/// carry the fingerprints the back-end returns.
class ExternalModel final : public GenerativeModel {
 public:
  ExternalModel(GenerativeModelSpec spec, std::shared_ptr<protocol::WireClient> client);
  LatentVector encode(const Candidate& candidate) const override;
  Candidate decode(const LatentVector& z) const override;
  std::vector<LatentVector> encode_batch(std::span<const Candidate> candidates) const override;
  std::vector<Candidate> decode_batch(std::span<const LatentVector> latents) const override;

 private:
  std::shared_ptr<protocol::WireClient> client_;
};

/// Builds the model described by `spec`; external models connect and
/// handshake here.
std::unique_ptr<GenerativeModel> make_model(const GenerativeModelSpec& spec);

LatentVector encode(const GenerativeModel& model, const Candidate& candidate);
Candidate decode(const GenerativeModel& model, const LatentVector& z);

/// `n` independent standard-normal latents of dimension spec.dim. Latent k is
/// drawn from the counter stream (seed, prior, k), so prefixes agree across n.
std::vector<LatentVector> sample_prior(const GenerativeModelSpec& spec, std::size_t n,
                                       std::uint64_t seed);

}  // namespace lsopt
