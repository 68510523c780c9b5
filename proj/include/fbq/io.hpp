#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbq/codebook.hpp"
#include "fbq/trees.hpp"

namespace fbq {

// Binary container: a 16-byte header (magic "RVQ1", u32 N, u32 B, u32
// reserved), then 2^B * N little-endian f64 (re, im) pairs, row-major.
// A tree may follow as a "TRE1" block of fixed 15-byte pre-order node
// records (u8 kind tag, u16 split dim, f64 pivot value, u32 entry index).
// GLA centroids are not stored; they are rebuilt from the leaf partition.

namespace detail {

inline void put_bytes(std::string& out, const void* p, std::size_t n) {
  out.append(static_cast<const char*>(p), n);
}

template <typename T>
void put(std::string& out, T v) {
  put_bytes(out, &v, sizeof(T));
}

class ByteReader {
 public:
  ByteReader(const std::string& buf, std::size_t pos) : buf_(buf), pos_(pos) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > buf_.size()) throw std::runtime_error("io: truncated file");
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  void expect_magic(const char* magic) {
    if (pos_ + 4 > buf_.size() || std::memcmp(buf_.data() + pos_, magic, 4) != 0)
      throw std::runtime_error(std::string("io: bad magic, expected ") + magic);
    pos_ += 4;
  }

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  const std::string& buf_;
  std::size_t pos_;
};

constexpr std::uint8_t kTagInternal = 0;
constexpr std::uint8_t kTagLeaf = 1;
constexpr std::uint8_t kTreeKindKd = 0;
constexpr std::uint8_t kTreeKindGla = 1;

inline void append_codebook(std::string& out, const Codebook& cb) {
  put_bytes(out, "RVQ1", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cb.dim()));
  put<std::uint32_t>(out, cb.bits());
  put<std::uint32_t>(out, 0);
  for (const cplx& z : cb.data()) {
    put<double>(out, z.real());
    put<double>(out, z.imag());
  }
}

inline void append_record(std::string& out, std::uint8_t tag, std::uint16_t dim, double pivot,
                          std::uint32_t entry) {
  put<std::uint8_t>(out, tag);
  put<std::uint16_t>(out, dim);
  put<double>(out, pivot);
  put<std::uint32_t>(out, entry);
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("io: cannot open for writing: " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("io: short write: " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("io: cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return buf;
}

}  // namespace detail

inline void save_codebook(const std::string& path, const Codebook& cb) {
  std::string out;
  detail::append_codebook(out, cb);
  detail::write_file(path, out);
}

inline void save_tree(const std::string& path, const Codebook& cb, const KdTree& tree) {
  std::string out;
  detail::append_codebook(out, cb);
  detail::put_bytes(out, "TRE1", 4);
  detail::put<std::uint8_t>(out, detail::kTreeKindKd);
  detail::put<std::uint8_t>(out, 0);
  detail::put<std::uint8_t>(out, 0);
  detail::put<std::uint8_t>(out, 0);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(tree.nodes.size()));
  auto rec = [&](auto&& self, std::int32_t ni) -> void {
    const KdTree::Node& nd = tree.nodes[ni];
    if (nd.leaf) {
      detail::append_record(out, detail::kTagLeaf, nd.split_dim, 0.0, nd.entry);
      return;
    }
    detail::append_record(out, detail::kTagInternal, nd.split_dim, nd.pivot_value, nd.entry);
    self(self, nd.left);
    self(self, nd.right);
  };
  rec(rec, 0);
  detail::write_file(path, out);
}

inline void save_tree(const std::string& path, const Codebook& cb, const GlaTree& tree) {
  std::string out;
  detail::append_codebook(out, cb);
  detail::put_bytes(out, "TRE1", 4);
  detail::put<std::uint8_t>(out, detail::kTreeKindGla);
  detail::put<std::uint8_t>(out, 0);
  detail::put<std::uint8_t>(out, 0);
  detail::put<std::uint8_t>(out, 0);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(tree.nodes.size()));
  auto rec = [&](auto&& self, std::int32_t ni) -> void {
    const GlaTree::Node& nd = tree.nodes[ni];
    if (nd.leaf) {
      detail::append_record(out, detail::kTagLeaf, 0, 0.0, nd.entry);
      return;
    }
    detail::append_record(out, detail::kTagInternal, 0, 0.0, 0);
    self(self, nd.left);
    self(self, nd.right);
  };
  rec(rec, 0);
  detail::write_file(path, out);
}

struct LoadedContainer {
  Codebook codebook;
  std::optional<KdTree> kd;
  std::optional<GlaTree> gla;
};

namespace detail {

inline Codebook read_codebook(ByteReader& r) {
  r.expect_magic("RVQ1");
  const std::uint32_t n = r.get<std::uint32_t>();
  const std::uint32_t bits = r.get<std::uint32_t>();
  r.get<std::uint32_t>();  // reserved
  if (n == 0 || bits > 48) throw std::runtime_error("io: implausible codebook header");
  const std::size_t count = std::size_t{1} << bits;
  std::vector<cplx> data(count * n);
  for (cplx& z : data) {
    const double re = r.get<double>();
    const double im = r.get<double>();
    z = cplx(re, im);
  }
  return Codebook(n, bits, std::move(data));
}

struct RawNode {
  std::uint8_t tag = 0;
  std::uint16_t dim = 0;
  double pivot = 0.0;
  std::uint32_t entry = 0;
};

inline std::vector<RawNode> read_records(ByteReader& r) {
  r.expect_magic("TRE1");
  const std::uint8_t kind = r.get<std::uint8_t>();
  r.get<std::uint8_t>();
  r.get<std::uint8_t>();
  r.get<std::uint8_t>();
  const std::uint32_t count = r.get<std::uint32_t>();
  std::vector<RawNode> recs(count);
  for (RawNode& rec : recs) {
    rec.tag = r.get<std::uint8_t>();
    rec.dim = r.get<std::uint16_t>();
    rec.pivot = r.get<double>();
    rec.entry = r.get<std::uint32_t>();
  }
  recs.push_back(RawNode{kind, 0, 0.0, 0});  // smuggle the kind to the caller
  return recs;
}

}  // namespace detail

inline LoadedContainer load_container(const std::string& path) {
  const std::string buf = detail::read_file(path);
  detail::ByteReader r(buf, 0);
  LoadedContainer out;
  out.codebook = detail::read_codebook(r);
  if (r.at_end()) return out;

  std::vector<detail::RawNode> recs = detail::read_records(r);
  const std::uint8_t kind = recs.back().tag;
  recs.pop_back();
  if (!r.at_end()) throw std::runtime_error("io: trailing bytes after tree block");

  const Codebook& cb = out.codebook;
  const std::size_t dim2 = 2 * cb.dim();
  std::vector<double> pts(cb.size() * dim2);
  for (std::size_t j = 0; j < cb.size(); ++j) {
    const RVec e = embed_real(cb.entry_vec(j));
    std::copy(e.begin(), e.end(), pts.begin() + j * dim2);
  }

  std::size_t cursor = 0;
  auto next = [&]() -> const detail::RawNode& {
    if (cursor >= recs.size()) throw std::runtime_error("io: truncated tree block");
    return recs[cursor++];
  };

  if (kind == detail::kTreeKindKd) {
    KdTree tree;
    tree.complex_dim = cb.dim();
    tree.dim2 = dim2;
    tree.pts = std::move(pts);
    auto rec = [&](auto&& self) -> std::int32_t {
      const detail::RawNode raw = next();
      const std::int32_t me = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes[me].split_dim = raw.dim;
      if (raw.entry >= cb.size()) throw std::runtime_error("io: entry index out of range");
      tree.nodes[me].entry = raw.entry;
      if (raw.tag == detail::kTagLeaf) {
        tree.nodes[me].leaf = true;
        return me;
      }
      tree.nodes[me].pivot_value = raw.pivot;
      const std::int32_t l = self(self);
      const std::int32_t r2 = self(self);
      tree.nodes[me].left = l;
      tree.nodes[me].right = r2;
      tree.nodes[me].subtree_leaves =
          tree.nodes[l].subtree_leaves + tree.nodes[r2].subtree_leaves;
      return me;
    };
    rec(rec);
    if (cursor != recs.size()) throw std::runtime_error("io: extra tree records");
    out.kd = std::move(tree);
    return out;
  }
  if (kind == detail::kTreeKindGla) {
    GlaTree tree;
    tree.complex_dim = cb.dim();
    tree.dim2 = dim2;
    tree.pts = std::move(pts);
    // rebuild centroids as means over each subtree's leaves, summed in
    // ascending entry order exactly as the builder does
    auto rec = [&](auto&& self, std::vector<std::uint32_t>& leaves) -> std::int32_t {
      const detail::RawNode raw = next();
      const std::int32_t me = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      if (raw.tag == detail::kTagLeaf) {
        if (raw.entry >= cb.size()) throw std::runtime_error("io: entry index out of range");
        tree.nodes[me].leaf = true;
        tree.nodes[me].entry = raw.entry;
        leaves.push_back(raw.entry);
        return me;
      }
      std::vector<std::uint32_t> lleaves, rleaves;
      const std::int32_t l = self(self, lleaves);
      const std::int32_t r2 = self(self, rleaves);
      auto mean_of = [&](std::vector<std::uint32_t>& group) {
        std::sort(group.begin(), group.end());
        std::vector<double> mean(dim2, 0.0);
        for (std::uint32_t e : group)
          for (std::size_t d = 0; d < dim2; ++d) mean[d] += tree.pts[e * dim2 + d];
        for (double& v : mean) v /= static_cast<double>(group.size());
        return mean;
      };
      tree.nodes[me].left = l;
      tree.nodes[me].right = r2;
      tree.nodes[me].centroid_left = mean_of(lleaves);
      tree.nodes[me].centroid_right = mean_of(rleaves);
      tree.nodes[me].centroid_dist2 =
          detail::dist2(tree.nodes[me].centroid_left, tree.nodes[me].centroid_right);
      tree.nodes[me].subtree_leaves =
          tree.nodes[l].subtree_leaves + tree.nodes[r2].subtree_leaves;
      leaves.reserve(leaves.size() + lleaves.size() + rleaves.size());
      leaves.insert(leaves.end(), lleaves.begin(), lleaves.end());
      leaves.insert(leaves.end(), rleaves.begin(), rleaves.end());
      return me;
    };
    std::vector<std::uint32_t> all;
    rec(rec, all);
    if (cursor != recs.size()) throw std::runtime_error("io: extra tree records");
    out.gla = std::move(tree);
    return out;
  }
  throw std::runtime_error("io: unknown tree kind tag");
}

}  // namespace fbq
