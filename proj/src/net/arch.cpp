#include "prunekit/net/arch.hpp"

#include <nlohmann/json.hpp>

namespace prunekit {

using nlohmann::json;

const char* to_string(Family f) {
  return f == Family::resnet_cifar ? "resnet_cifar" : "transformer_tabular";
}

const char* to_string(BlockKind k) {
  switch (k) {
    case BlockKind::residual_identity: return "residual_identity";
    case BlockKind::residual_downsample: return "residual_downsample";
    case BlockKind::transformer_encoder: return "transformer_encoder";
  }
  return "unknown";
}

Family family_from_string(const std::string& s) {
  if (s == "resnet_cifar") return Family::resnet_cifar;
  if (s == "transformer_tabular") return Family::transformer_tabular;
  fail(ErrorKind::SpecError, "unknown family '" + s + "'");
}

BlockKind block_kind_from_string(const std::string& s) {
  if (s == "residual_identity") return BlockKind::residual_identity;
  if (s == "residual_downsample") return BlockKind::residual_downsample;
  if (s == "transformer_encoder") return BlockKind::transformer_encoder;
  fail(ErrorKind::SpecError, "unknown block kind '" + s + "'");
}

const BlockSpec* ArchitectureSpec::find_block(LayerRef ref) const {
  if (ref.stage < 0 || ref.stage >= static_cast<int>(stages.size())) return nullptr;
  const auto& blocks = stages[static_cast<std::size_t>(ref.stage)].blocks;
  if (ref.index < 0 || ref.index >= static_cast<int>(blocks.size())) return nullptr;
  return &blocks[static_cast<std::size_t>(ref.index)];
}

std::vector<LayerRef> ArchitectureSpec::all_blocks() const {
  std::vector<LayerRef> out;
  for (const auto& stage : stages)
    for (const auto& block : stage.blocks) out.push_back(block.id);
  return out;
}

int ArchitectureSpec::block_count() const {
  int n = 0;
  for (const auto& stage : stages) n += static_cast<int>(stage.blocks.size());
  return n;
}

int ArchitectureSpec::feature_dim() const {
  if (family == Family::resnet_cifar) {
    return stages.back().blocks.back().out_channels;
  }
  return stages.front().blocks.front().model_dim;
}

void ArchitectureSpec::validate() const {
  if (stages.empty()) fail(ErrorKind::SpecError, "no stages");
  if (classes < 2) fail(ErrorKind::SpecError, "need at least 2 classes");

  for (std::size_t s = 0; s < stages.size(); ++s) {
    const auto& blocks = stages[s].blocks;
    if (blocks.size() < 2) {
      fail(ErrorKind::SpecError, "stage " + std::to_string(s) + " has fewer than 2 blocks");
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto& blk = blocks[b];
      if (blk.id.stage != static_cast<int>(s) || blk.id.index != static_cast<int>(b)) {
        fail(ErrorKind::SpecError, "block id " + blk.id.str() + " does not match its position");
      }
    }
  }

  if (family == Family::resnet_cifar) {
    if (input.channels < 1 || input.height < 4 || input.width < 4) {
      fail(ErrorKind::SpecError, "invalid input shape");
    }
    if (stem_width < 1) fail(ErrorKind::SpecError, "stem width must be positive");
    int h = input.height, w = input.width;
    int prev_width = stem_width;
    for (std::size_t s = 0; s < stages.size(); ++s) {
      const auto& blocks = stages[s].blocks;
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& blk = blocks[b];
        if (b == 0) {
          if (blk.kind != BlockKind::residual_downsample || blk.removable) {
            fail(ErrorKind::SpecError,
                 "first block of stage " + std::to_string(s) + " must be a protected downsample");
          }
          if (blk.in_channels != prev_width) {
            fail(ErrorKind::SpecError, "channel chain broken at " + blk.id.str());
          }
          if (blk.stride != 1 && blk.stride != 2) {
            fail(ErrorKind::SpecError, "unsupported stride at " + blk.id.str());
          }
          if (blk.stride == 2 && (h % 2 != 0 || w % 2 != 0)) {
            fail(ErrorKind::SpecError, "odd spatial size before " + blk.id.str());
          }
          h /= blk.stride;
          w /= blk.stride;
        } else {
          if (blk.kind != BlockKind::residual_identity || !blk.removable) {
            fail(ErrorKind::SpecError, blk.id.str() + " must be a removable identity block");
          }
          if (blk.stride != 1 || blk.in_channels != blk.out_channels) {
            fail(ErrorKind::SpecError, blk.id.str() + " identity block must preserve shape");
          }
        }
        if (blk.out_channels != blocks[0].out_channels || blk.in_channels < 1) {
          fail(ErrorKind::SpecError, "widths inconsistent inside stage " + std::to_string(s));
        }
      }
      prev_width = blocks[0].out_channels;
    }
    if (h < 1 || w < 1) fail(ErrorKind::SpecError, "input too small for stage count");
  } else {
    if (stages.size() != 1) fail(ErrorKind::SpecError, "transformer uses a single stage");
    if (input.features < 1) fail(ErrorKind::SpecError, "need at least one input feature");
    const auto& blocks = stages[0].blocks;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto& blk = blocks[b];
      if (blk.kind != BlockKind::transformer_encoder) {
        fail(ErrorKind::SpecError, blk.id.str() + " must be a transformer encoder block");
      }
      if (blk.model_dim < 1 || blk.num_heads < 1 || blk.model_dim % blk.num_heads != 0) {
        fail(ErrorKind::SpecError, "model_dim must be divisible by heads at " + blk.id.str());
      }
      if (blk.ffn_dim < 1) fail(ErrorKind::SpecError, "ffn_dim must be positive");
      if (blk.model_dim != blocks[0].model_dim || blk.num_heads != blocks[0].num_heads ||
          blk.ffn_dim != blocks[0].ffn_dim) {
        fail(ErrorKind::SpecError, "transformer blocks must share dimensions");
      }
      bool boundary = b == 0 || b + 1 == blocks.size();
      if (blk.removable == boundary) {
        fail(ErrorKind::SpecError, "removable flag wrong at " + blk.id.str());
      }
    }
  }
}

json ArchitectureSpec::to_json() const {
  json stages_json = json::array();
  for (const auto& stage : stages) {
    json blocks = json::array();
    for (const auto& blk : stage.blocks) {
      json b{{"id", blk.id.str()},
             {"kind", to_string(blk.kind)},
             {"removable", blk.removable}};
      if (family == Family::resnet_cifar) {
        b["in_channels"] = blk.in_channels;
        b["out_channels"] = blk.out_channels;
        b["stride"] = blk.stride;
      } else {
        b["model_dim"] = blk.model_dim;
        b["num_heads"] = blk.num_heads;
        b["ffn_dim"] = blk.ffn_dim;
      }
      blocks.push_back(std::move(b));
    }
    stages_json.push_back(json{{"blocks", std::move(blocks)}});
  }

  json input_json;
  if (family == Family::resnet_cifar) {
    input_json = {{"channels", input.channels}, {"height", input.height}, {"width", input.width}};
  } else {
    input_json = {{"features", input.features}};
  }

  json j{{"family", to_string(family)},
         {"stages", std::move(stages_json)},
         {"input", std::move(input_json)},
         {"classes", classes}};
  if (family == Family::resnet_cifar) j["stem_width"] = stem_width;
  return j;
}

ArchitectureSpec ArchitectureSpec::from_json(const json& j) {
  ArchitectureSpec spec;
  try {
    spec.family = family_from_string(j.at("family").get<std::string>());
    spec.classes = j.at("classes").get<int>();
    if (spec.family == Family::resnet_cifar) {
      spec.stem_width = j.at("stem_width").get<int>();
      spec.input.channels = j.at("input").at("channels").get<int>();
      spec.input.height = j.at("input").at("height").get<int>();
      spec.input.width = j.at("input").at("width").get<int>();
    } else {
      spec.input.features = j.at("input").at("features").get<int>();
    }
    for (const auto& stage_json : j.at("stages")) {
      StageSpec stage;
      for (const auto& b : stage_json.at("blocks")) {
        BlockSpec blk;
        blk.id = parse_layer_ref(b.at("id").get<std::string>());
        blk.kind = block_kind_from_string(b.at("kind").get<std::string>());
        blk.removable = b.at("removable").get<bool>();
        if (spec.family == Family::resnet_cifar) {
          blk.in_channels = b.at("in_channels").get<int>();
          blk.out_channels = b.at("out_channels").get<int>();
          blk.stride = b.at("stride").get<int>();
        } else {
          blk.model_dim = b.at("model_dim").get<int>();
          blk.num_heads = b.at("num_heads").get<int>();
          blk.ffn_dim = b.at("ffn_dim").get<int>();
        }
        stage.blocks.push_back(blk);
      }
      spec.stages.push_back(std::move(stage));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::SpecError, std::string("bad architecture json: ") + e.what());
  }
  spec.validate();
  return spec;
}

ArchitectureSpec make_resnet_spec(const std::vector<int>& stage_blocks,
                                  const std::vector<int>& widths, InputShape input,
                                  int classes) {
  if (stage_blocks.size() != widths.size() || stage_blocks.empty()) {
    fail(ErrorKind::SpecError, "stage_blocks and widths must align");
  }
  ArchitectureSpec spec;
  spec.family = Family::resnet_cifar;
  spec.input = input;
  spec.classes = classes;
  spec.stem_width = widths[0];

  int prev_width = spec.stem_width;
  for (std::size_t s = 0; s < stage_blocks.size(); ++s) {
    StageSpec stage;
    for (int b = 0; b < stage_blocks[s]; ++b) {
      BlockSpec blk;
      blk.id = LayerRef{static_cast<int>(s), b};
      if (b == 0) {
        blk.kind = BlockKind::residual_downsample;
        blk.removable = false;
        blk.in_channels = prev_width;
        blk.stride = s == 0 ? 1 : 2;
      } else {
        blk.kind = BlockKind::residual_identity;
        blk.removable = true;
        blk.in_channels = widths[s];
        blk.stride = 1;
      }
      blk.out_channels = widths[s];
      stage.blocks.push_back(blk);
    }
    spec.stages.push_back(std::move(stage));
    prev_width = widths[s];
  }
  spec.validate();
  return spec;
}

ArchitectureSpec make_transformer_spec(int blocks, int model_dim, int num_heads,
                                       int ffn_dim, int features, int classes) {
  ArchitectureSpec spec;
  spec.family = Family::transformer_tabular;
  spec.input.features = features;
  spec.classes = classes;
  StageSpec stage;
  for (int b = 0; b < blocks; ++b) {
    BlockSpec blk;
    blk.id = LayerRef{0, b};
    blk.kind = BlockKind::transformer_encoder;
    blk.removable = b != 0 && b != blocks - 1;
    blk.model_dim = model_dim;
    blk.num_heads = num_heads;
    blk.ffn_dim = ffn_dim;
    stage.blocks.push_back(blk);
  }
  spec.stages.push_back(std::move(stage));
  spec.validate();
  return spec;
}

void reindex_blocks(ArchitectureSpec& spec) {
  for (std::size_t s = 0; s < spec.stages.size(); ++s) {
    auto& blocks = spec.stages[s].blocks;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      auto& blk = blocks[b];
      blk.id = LayerRef{static_cast<int>(s), static_cast<int>(b)};
      if (spec.family == Family::resnet_cifar) {
        blk.removable = b != 0;
      } else {
        blk.removable = b != 0 && b + 1 != blocks.size();
      }
    }
  }
}

}  // namespace prunekit
