#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "prunekit/layer_ref.hpp"

namespace prunekit {

enum class Family { resnet_cifar, transformer_tabular };
enum class BlockKind { residual_identity, residual_downsample, transformer_encoder };

const char* to_string(Family f);
const char* to_string(BlockKind k);
Family family_from_string(const std::string& s);
BlockKind block_kind_from_string(const std::string& s);

/// One residual or transformer-encoder block; the unit of surgery.
struct BlockSpec {
  LayerRef id;
  BlockKind kind = BlockKind::residual_identity;
  bool removable = false;

  // residual blocks
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;

  // transformer blocks
  int model_dim = 0;
  int num_heads = 0;
  int ffn_dim = 0;

  bool has_projection() const {
    return kind == BlockKind::residual_downsample &&
           (stride != 1 || in_channels != out_channels);
  }
};

struct StageSpec {
  std::vector<BlockSpec> blocks;
};

struct InputShape {
  int channels = 0;
  int height = 0;
  int width = 0;
  int features = 0;  // tabular input width (transformer family)
};

/// Declarative description of a residual or transformer network.
/// Serialization uses only integers and strings, so JSON round-trips are
/// byte-exact.
struct ArchitectureSpec {
  Family family = Family::resnet_cifar;
  std::vector<StageSpec> stages;
  InputShape input;
  int classes = 0;
  int stem_width = 0;  // resnet stem conv width

  const BlockSpec* find_block(LayerRef ref) const;
  std::vector<LayerRef> all_blocks() const;
  int block_count() const;

  /// Width of the representation fed to the classifier.
  int feature_dim() const;

  /// Throws SpecError on any structural violation.
  void validate() const;

  nlohmann::json to_json() const;
  static ArchitectureSpec from_json(const nlohmann::json& j);
};

/// Standard CIFAR-style residual stack: one 3x3 stem conv, `stage_blocks[i]`
/// blocks at width `widths[i]`, stride-2 transition at each stage boundary,
/// global average pooling and a linear classifier.
ArchitectureSpec make_resnet_spec(const std::vector<int>& stage_blocks,
                                  const std::vector<int>& widths, InputShape input,
                                  int classes);

/// Pre-norm encoder stack over per-feature tokens with mean pooling.
ArchitectureSpec make_transformer_spec(int blocks, int model_dim, int num_heads,
                                       int ffn_dim, int features, int classes);

/// Recomputes ids, kinds and removable flags from block positions. Called
/// after surgery so the spec invariants keep holding on the new topology.
void reindex_blocks(ArchitectureSpec& spec);

}  // namespace prunekit
