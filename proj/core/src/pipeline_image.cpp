#include "bipipe/pipeline_image.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace bipipe {

unsigned bits_for(std::uint64_t n) {
  unsigned b = 0;
  while ((std::uint64_t{1} << b) < n) ++b;
  return b;
}

std::size_t PipelineImage::total_entries() const {
  std::size_t n = 0;
  for (const auto& m : memory) n += m.size();
  return n;
}

std::uint32_t PipelineImage::cell_of(const Header& h) const {
  switch (index_kind) {
    case IndexKind::kWhole: return 0;
    case IndexKind::kInitialBits:
      return initial_bits == 0 ? 0 : get(h, Field::kDstIp) >> (32 - initial_bits);
    case IndexKind::kFirstCut: return first_cut->cell_of(h);
  }
  return 0;
}

std::optional<std::uint32_t> PipelineImage::subtree_for(const Header& h) const {
  const auto s = index[cell_of(h)];
  if (s == PartitionSet::kNoSubtree) return std::nullopt;
  return static_cast<std::uint32_t>(s);
}

PipelineImage build_pipeline(const PartitionSet& partition, const MappingResult& mapping,
                             const ImageOptions& options) {
  const auto report = validate_mapping(partition, mapping);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw std::invalid_argument("invalid mapping (" + std::string(to_string(v.kind)) + "): " + v.detail);
  }
  if (!report.image_compatible()) {
    throw std::invalid_argument("mapping splits sibling blocks: " + report.layout_warnings.front().detail);
  }
  const SearchTree& forest = partition.forest;

  PipelineImage img;
  img.kind = forest.kind();
  img.stages = mapping.stages;
  img.bit_offset = forest.bit_offset;
  img.key_width = forest.key_width;
  img.index_kind = partition.index_kind;
  img.initial_bits = partition.initial_bits;
  img.first_cut = partition.first_cut;
  img.index = partition.index;
  img.dit = mapping.dit;
  img.cuts = forest.cuts;
  img.rules = forest.rules;
  img.buckets = forest.buckets;
  img.bubble_tables.resize(img.stages);

  std::size_t largest = 0;
  img.memory.resize(img.stages);
  for (unsigned s = 1; s <= img.stages; ++s) {
    img.memory[s - 1].resize(mapping.stage_size(s));
    largest = std::max(largest, mapping.stage_size(s));
  }
  if (options.stage_capacity == 0) {
    img.stage_capacity = static_cast<std::uint32_t>(std::uint64_t{1} << bits_for(std::max<std::size_t>(largest, 1)));
  } else {
    if (largest > options.stage_capacity) {
      throw std::length_error("stage holds " + std::to_string(largest) + " entries, capacity is " +
                              std::to_string(options.stage_capacity) + "; needs " +
                              std::to_string(bits_for(largest)) + " address bits");
    }
    img.stage_capacity = options.stage_capacity;
  }

  for (NodeId id = 0; id < forest.size(); ++id) {
    const auto& n = forest.node(id);
    const auto& p = mapping.placement[id];
    StageEntry e;
    e.kind = n.kind;
    if (n.kind == NodeKind::kInternal) {
      const auto& c = mapping.placement[forest.children(id).front()];
      e.child_base = c.addr;
      e.child_skip = static_cast<std::uint16_t>((c.stage > p.stage ? c.stage - p.stage : p.stage - c.stage) - 1);
      e.cut = n.cut;
    } else if (n.kind == NodeKind::kLeaf) {
      e.payload = n.payload;
    }
    img.memory[p.stage - 1][p.addr] = e;
  }
  return img;
}

std::optional<Walk> begin_walk(const PipelineImage& image, const Header& key) {
  const auto s = image.subtree_for(key);
  if (!s) return std::nullopt;
  const DitRecord& d = image.dit[*s];
  Walk w;
  w.direction = d.direction;
  w.addr = d.root_addr;
  w.skip = d.distance;
  return w;
}

namespace {

Answer match_image_bucket(const PipelineImage& image, std::uint32_t bucket, const Header& key) {
  for (auto idx : image.buckets[bucket]) {
    if (image.rules[idx].matches(key)) return image.rules[idx].id;
  }
  return std::nullopt;
}

}  // namespace

bool step_walk(const PipelineImage& image, Walk& walk, unsigned stage, const Header& key) {
  if (walk.done) return false;
  if (walk.skip > 0) {
    --walk.skip;
    return false;
  }
  const auto& mem = image.memory[stage - 1];
  if (walk.addr >= mem.size()) {
    throw std::logic_error("walk reads address " + std::to_string(walk.addr) + " beyond stage " +
                           std::to_string(stage));
  }
  const StageEntry& e = mem[walk.addr];
  switch (e.kind) {
    case NodeKind::kInternal: {
      std::uint32_t branch;
      if (image.kind == TreeKind::kTrie) {
        branch = msb_bit(get(key, Field::kDstIp), image.bit_offset + walk.reads);
      } else {
        branch = image.cuts[e.cut].cell_of(key);
      }
      walk.addr = e.child_base + branch;
      walk.skip = e.child_skip;
      ++walk.reads;
      break;
    }
    case NodeKind::kLeaf:
      walk.done = true;
      if (image.kind == TreeKind::kTrie) {
        walk.result = e.payload == kNoPayload ? Answer{} : Answer{e.payload};
      } else {
        walk.result = match_image_bucket(image, e.payload, key);
      }
      break;
    case NodeKind::kNull:
      walk.done = true;
      walk.result.reset();
      break;
  }
  return true;
}

Answer lookup_static(const PipelineImage& image, const Header& key) {
  auto w = begin_walk(image, key);
  if (!w) return std::nullopt;
  for (unsigned pos = 0; pos < image.stages && !w->done; ++pos) {
    step_walk(image, *w, stage_at(image, w->direction, pos), key);
  }
  if (!w->done) throw std::logic_error("walk left the pipeline without reaching a leaf");
  return w->result;
}

unsigned actual_entry_bits(const PipelineImage& image) {
  std::uint64_t max_payload = 0;
  for (const auto& stage : image.memory) {
    for (const auto& e : stage) {
      if (e.kind == NodeKind::kLeaf && e.payload != kNoPayload) max_payload = std::max<std::uint64_t>(max_payload, e.payload);
    }
  }
  const unsigned kind_bits = 2;
  const unsigned addr_bits = std::max(1u, bits_for(image.stage_capacity));
  const unsigned dist_bits = std::max(1u, bits_for(image.stages));
  // one extra code for "no payload"
  const unsigned payload_bits = std::max(1u, bits_for(max_payload + 2));
  const unsigned cut_bits = image.kind == TreeKind::kDecisionTree ? std::max(1u, bits_for(image.cuts.size() + 1)) : 0;
  return kind_bits + addr_bits + dist_bits + payload_bits + cut_bits;
}

MemoryFootprint memory_footprint(std::span<const std::size_t> stage_entries, unsigned entry_bits) {
  MemoryFootprint f;
  f.entry_bits = entry_bits;
  std::uint64_t max_bits = 0;
  for (auto n : stage_entries) {
    const std::uint64_t b = static_cast<std::uint64_t>(n) * entry_bits;
    f.stage_bits.push_back(b);
    f.total_bits += b;
    max_bits = std::max(max_bits, b);
  }
  f.total_bytes = (f.total_bits + 7) / 8;
  f.max_stage_kib = static_cast<double>(max_bits) / 8.0 / 1024.0;
  f.total_mb = static_cast<double>(f.total_bytes) / 1024.0 / 1000.0;
  f.total_mbit = static_cast<double>(f.total_bits) / 1024000.0;
  return f;
}

MemoryFootprint memory_footprint(const PipelineImage& image, EntryBits mode) {
  std::vector<std::size_t> counts;
  for (const auto& m : image.memory) counts.push_back(m.size());
  return memory_footprint(counts, mode == EntryBits::kPaper20 ? 20u : actual_entry_bits(image));
}

}  // namespace bipipe
