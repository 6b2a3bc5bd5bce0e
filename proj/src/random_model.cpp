#include "blockflow/random_model.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "blockflow/errors.hpp"

namespace blockflow {

namespace {

// mt19937_64 has a standard-pinned sequence; the bounded draw below uses
// plain rejection so results do not depend on the library's distribution
// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t fair = (UINT64_MAX / n) * n;
    for (;;) {
      std::uint64_t x = eng_();
      if (x < fair) return x % n;
    }
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(below(n)); }

  std::uint64_t range(std::uint64_t lo, std::uint64_t hi) {
    return lo + below(hi - lo + 1);
  }

 private:
  std::mt19937_64 eng_;
};

std::string padded(const std::string& prefix, std::size_t i, std::size_t count) {
  std::size_t width = 1;
  for (std::size_t c = count; c > 10; c = (c + 9) / 10) ++width;
  std::string digits = std::to_string(i);
  std::string out = prefix;
  for (std::size_t k = digits.size(); k < width; ++k) out += '0';
  return out + digits;
}

// Node layout: positions [0, I) are inports, [I, I+M) middle blocks,
// [I+M, I+M+O) outports. Edges always point from a lower position to a
// higher one, so the generated graph is acyclic by construction.
struct Layout {
  std::size_t n_in, n_mid, n_out;
  std::size_t total() const { return n_in + n_mid + n_out; }
  bool is_in(std::size_t p) const { return p < n_in; }
  bool is_out(std::size_t p) const { return p >= n_in + n_mid; }
};

struct Draft {
  std::vector<BlockKind> mid_kind;                          // per middle block
  std::vector<std::vector<std::size_t>> inputs;             // per position: src positions in port order
  std::vector<std::size_t> out_degree;
};

bool build_draft(const Layout& lay, Rng& rng, Draft& d) {
  d.mid_kind.assign(lay.n_mid, BlockKind::Compute);
  d.inputs.assign(lay.total(), {});
  d.out_degree.assign(lay.total(), 0);

  // Kinds. Const never appears here: it has no inputs, so it could not
  // sit on an Inport -> Outport path. Sum needs two distinct earlier nodes.
  static const BlockKind unary[] = {BlockKind::Gain, BlockKind::Delay, BlockKind::Compute};
  for (std::size_t i = 0; i < lay.n_mid; ++i) {
    bool sum_ok = lay.n_in + i >= 2;
    std::uint64_t pick = rng.below(sum_ok ? 4 : 3);
    d.mid_kind[i] = pick < 3 ? unary[pick] : BlockKind::Sum;
  }

  auto add_edge = [&](std::size_t src, std::size_t dst) {
    d.inputs[dst].push_back(src);
    ++d.out_degree[src];
  };

  // Required inputs, drawn from strictly earlier positions. Induction on
  // position keeps every middle block reachable from some Inport.
  for (std::size_t i = 0; i < lay.n_mid; ++i) {
    std::size_t pos = lay.n_in + i;
    std::size_t pool = lay.n_in + i;
    std::size_t first = rng.index(pool);
    add_edge(first, pos);
    if (d.mid_kind[i] == BlockKind::Sum) {
      std::size_t second = rng.index(pool - 1);
      if (second >= first) ++second;
      add_edge(second, pos);
    }
  }

  // Coverage: every inport and middle block needs at least one consumer.
  // Latest suppliers get first claim on outports since only later Sum
  // blocks can otherwise absorb them.
  std::vector<std::size_t> unused;
  for (std::size_t p = 0; p < lay.n_in + lay.n_mid; ++p)
    if (d.out_degree[p] == 0) unused.push_back(p);
  std::size_t next_outport = lay.n_in + lay.n_mid;
  const std::size_t outport_end = lay.total();
  for (auto it = unused.rbegin(); it != unused.rend(); ++it) {
    std::size_t p = *it;
    if (next_outport < outport_end) {
      add_edge(p, next_outport++);
      continue;
    }
    std::vector<std::size_t> later_sums;
    for (std::size_t i = 0; i < lay.n_mid; ++i)
      if (d.mid_kind[i] == BlockKind::Sum && lay.n_in + i > p)
        later_sums.push_back(lay.n_in + i);
    if (later_sums.empty()) return false;
    add_edge(p, later_sums[rng.index(later_sums.size())]);
  }

  // Remaining outports draw from any earlier non-outport node.
  while (next_outport < outport_end) {
    add_edge(rng.index(lay.n_in + lay.n_mid), next_outport++);
  }
  return true;
}

}  // namespace

BlockGraph generate_random_model(const RandomSpec& spec) {
  if (spec.n_inports < 1 || spec.n_outports < 1 ||
      spec.n_blocks < spec.n_inports + spec.n_outports)
    throw Error(ErrorCode::InfeasibleSpec, "counts violate RandomSpec invariants");
  if (spec.edge_density < 0.0 || spec.edge_density > 1.0)
    throw Error(ErrorCode::InfeasibleSpec, "edge_density outside [0,1]");
  if (spec.weight_min > spec.weight_max)
    throw Error(ErrorCode::InfeasibleSpec, "compute_weight_range empty");

  Layout lay{spec.n_inports, spec.n_blocks - spec.n_inports - spec.n_outports,
             spec.n_outports};
  if (lay.n_mid == 0 && lay.n_in > lay.n_out)
    throw Error(ErrorCode::InfeasibleSpec,
                "every inport needs a consumer but outports are too few");

  Rng rng(spec.seed);
  Draft draft;
  bool ok = false;
  for (int attempt = 0; attempt < 64 && !ok; ++attempt) ok = build_draft(lay, rng, draft);
  if (!ok)
    throw Error(ErrorCode::InfeasibleSpec, "no feasible kind assignment found");

  // Density extras: only Sum blocks accept optional inputs. max-possible
  // counts one edge per (earlier node, consumer) pair within arity caps.
  std::size_t max_possible = 0;
  for (std::size_t i = 0; i < lay.n_mid; ++i)
    max_possible += draft.mid_kind[i] == BlockKind::Sum ? lay.n_in + i : 1;
  max_possible += lay.n_out;

  std::size_t current = 0;
  for (const auto& ins : draft.inputs) current += ins.size();
  std::size_t target = static_cast<std::size_t>(spec.edge_density * max_possible + 0.5);

  std::vector<std::pair<std::size_t, std::size_t>> extras;  // (src, sum position)
  for (std::size_t i = 0; i < lay.n_mid; ++i) {
    if (draft.mid_kind[i] != BlockKind::Sum) continue;
    std::size_t pos = lay.n_in + i;
    std::set<std::size_t> present(draft.inputs[pos].begin(), draft.inputs[pos].end());
    for (std::size_t src = 0; src < pos; ++src)
      if (!present.count(src)) extras.push_back({src, pos});
  }
  while (current < target && !extras.empty()) {
    std::size_t pick = rng.index(extras.size());
    auto [src, dst] = extras[pick];
    extras[pick] = extras.back();
    extras.pop_back();
    draft.inputs[dst].push_back(src);
    ++draft.out_degree[src];
    ++current;
  }

  // Materialize blocks and edges.
  BlockGraph g;
  g.name = "random-" + std::to_string(spec.seed);
  std::vector<std::string> id_of(lay.total());
  for (std::size_t i = 0; i < lay.n_in; ++i) {
    id_of[i] = padded("in", i, lay.n_in);
    g.blocks.push_back({id_of[i], BlockKind::Inport});
  }
  for (std::size_t i = 0; i < lay.n_mid; ++i) {
    std::size_t pos = lay.n_in + i;
    id_of[pos] = padded("b", i, lay.n_mid);
    Block b;
    b.id = id_of[pos];
    b.kind = draft.mid_kind[i];
    if (b.kind == BlockKind::Gain)
      b.gain = (rng.below(2) ? 1.0 : -1.0) * static_cast<double>(rng.range(1, 4));
    if (b.kind == BlockKind::Compute) b.weight = rng.range(spec.weight_min, spec.weight_max);
    g.blocks.push_back(std::move(b));
  }
  for (std::size_t i = 0; i < lay.n_out; ++i) {
    std::size_t pos = lay.n_in + lay.n_mid + i;
    id_of[pos] = padded("out", i, lay.n_out);
    g.blocks.push_back({id_of[pos], BlockKind::Outport});
  }
  for (std::size_t pos = 0; pos < lay.total(); ++pos) {
    const auto& ins = draft.inputs[pos];
    for (std::size_t port = 0; port < ins.size(); ++port)
      g.edges.push_back({id_of[ins[port]], id_of[pos], static_cast<std::uint32_t>(port)});
  }
  return g;
}

}  // namespace blockflow
