#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "atn/asc.hpp"
#include "atn/config.hpp"
#include "atn/corpus.hpp"
#include "atn/dsc.hpp"
#include "atn/error.hpp"
#include "atn/params.hpp"
#include "atn/tensor.hpp"
#include "atn/transfer.hpp"

namespace atn {

// Binary container: magic, format version, component tag, config text, the
// vocabulary, a teacher reference hash (atn-af only, else 0), and named
// tensors as row-major little-endian f32. A trailing FNV-1a hash covers every
// preceding byte. save -> load -> save reproduces identical bytes.
struct Checkpoint {
  std::string tag;     // dsc | asc | atn-ag | atn-af
  std::string config;  // flat key=value text
  std::vector<std::string> vocab;  // tokens in id order
  std::uint64_t teacher_hash = 0;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return t;
    throw ArgumentError("checkpoint: no tensor named '" + name + "'");
  }
};

namespace detail {

inline constexpr char kCkptMagic[8] = {'A', 'T', 'N', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCkptVersion = 1;

inline void put_u32(std::string& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((x >> (8 * i)) & 0xff);
}

inline void put_u64(std::string& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((x >> (8 * i)) & 0xff);
}

inline void put_f32(std::string& out, float x) {
  std::uint32_t bits;
  std::memcpy(&bits, &x, 4);
  put_u32(out, bits);
}

inline void put_str(std::string& out, const std::string& s) {
  put_u64(out, s.size());
  out += s;
}

struct CkptCursor {
  const std::string& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw IoError("truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i)
      x |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i]))
           << (8 * i);
    pos += 4;
    return x;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i)
      x |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i]))
           << (8 * i);
    pos += 8;
    return x;
  }
  float f32() {
    std::uint32_t bits = u32();
    float x;
    std::memcpy(&x, &bits, 4);
    return x;
  }
  std::string str() {
    std::uint64_t n = u64();
    need(n);
    std::string s = bytes.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace detail

inline std::string checkpoint_bytes(const Checkpoint& c) {
  std::string out(detail::kCkptMagic, 8);
  detail::put_u32(out, detail::kCkptVersion);
  detail::put_str(out, c.tag);
  detail::put_str(out, c.config);
  detail::put_u64(out, c.vocab.size());
  for (const std::string& tok : c.vocab) detail::put_str(out, tok);
  detail::put_u64(out, c.teacher_hash);
  detail::put_u64(out, c.tensors.size());
  for (const auto& [name, t] : c.tensors) {
    detail::put_str(out, name);
    detail::put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) detail::put_u64(out, d);
    for (double x : t.v) detail::put_f32(out, static_cast<float>(x));
  }
  detail::put_u64(out, fnv1a64(out.data(), out.size()));
  return out;
}

// Checksum of the tensor content as checkpointed (after the f32 round trip),
// so a hash recorded at save time matches one recomputed from the loaded
// file. This is what atn-af stores as its teacher reference.
inline std::uint64_t checkpoint_value_hash(const Checkpoint& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : c.tensors) {
    h = fnv1a64(name.data(), name.size(), h);
    Tensor rounded = t;
    for (double& x : rounded.v) x = static_cast<double>(static_cast<float>(x));
    h = tensor_checksum(rounded, h);
  }
  return h;
}

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint " + path);
  std::string bytes = checkpoint_bytes(c);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to checkpoint " + path);
}

inline Checkpoint parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < 8 + 4 + 8 ||
      std::memcmp(bytes.data(), detail::kCkptMagic, 8) != 0)
    throw IoError("not a checkpoint file");
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i)
    stored |= static_cast<std::uint64_t>(
                  static_cast<unsigned char>(bytes[bytes.size() - 8 + i]))
              << (8 * i);
  if (fnv1a64(bytes.data(), bytes.size() - 8) != stored)
    throw IoError("checkpoint hash mismatch: file is corrupt");

  detail::CkptCursor cur{bytes, 8};
  std::uint32_t version = cur.u32();
  if (version != detail::kCkptVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint c;
  c.tag = cur.str();
  c.config = cur.str();
  std::uint64_t n_vocab = cur.u64();
  c.vocab.reserve(n_vocab);
  for (std::uint64_t i = 0; i < n_vocab; ++i) c.vocab.push_back(cur.str());
  c.teacher_hash = cur.u64();
  std::uint64_t n_tensors = cur.u64();
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    std::string name = cur.str();
    std::uint32_t rank = cur.u32();
    std::vector<std::size_t> shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d)
      shape[d] = static_cast<std::size_t>(cur.u64());
    Tensor t(shape);
    for (double& x : t.v) x = static_cast<double>(cur.f32());
    c.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (cur.pos != bytes.size() - 8)
    throw IoError("checkpoint has trailing garbage");
  return c;
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return parse_checkpoint(read_file(path));
}

// ---- model <-> checkpoint -------------------------------------------------

namespace detail {

inline std::vector<std::pair<std::string, Tensor>> store_tensors(
    const ParamStore& store) {
  std::vector<std::pair<std::string, Tensor>> out;  // store iterates sorted
  for (const auto& [name, e] : store) out.emplace_back(name, e.var->val);
  return out;
}

}  // namespace detail

inline Checkpoint make_dsc_checkpoint(const DscModel& m) {
  KvConfig kv;
  kv.set("d_e", m.cfg.d_e);
  kv.set("d_h", m.cfg.d_h);
  return {"dsc", kv.render(), m.vocab->id_to_token, 0,
          detail::store_tensors(m.params)};
}

inline Checkpoint make_asc_checkpoint(const AscModel& m, const std::string& tag,
                                      std::uint64_t teacher_hash = 0) {
  if (tag != "asc" && tag != "atn-ag" && tag != "atn-af")
    throw ArgumentError("make_asc_checkpoint: bad tag '" + tag + "'");
  KvConfig kv;
  kv.set("d_e", m.cfg.d_e);
  kv.set("d_h", m.cfg.d_h);
  kv.set("d_p", m.cfg.d_p);
  kv.set("max_position", m.cfg.max_position);
  return {tag, kv.render(), m.vocab->id_to_token, teacher_hash,
          detail::store_tensors(m.params)};
}

inline Vocabulary vocab_from_checkpoint(const Checkpoint& c) {
  if (c.vocab.size() < 2 || c.vocab[0] != "<pad>" || c.vocab[1] != "<unk>")
    throw IoError("checkpoint vocabulary lacks <pad>/<unk> header");
  Vocabulary v;
  v.id_to_token = c.vocab;
  for (std::size_t i = 0; i < v.id_to_token.size(); ++i)
    v.token_to_id[v.id_to_token[i]] = static_cast<int>(i);
  return v;
}

namespace detail {

inline void restore_from_checkpoint(ParamStore& store, const Checkpoint& c) {
  std::map<std::string, Tensor> snap;
  for (const auto& [name, t] : c.tensors) snap.emplace(name, t);
  store.restore(snap);  // shape-checked, errors on missing names
}

}  // namespace detail

// The vocabulary must outlive the model (typically via vocab_from_checkpoint).
// A rebuilt teacher is frozen: checkpointed weights are inference artifacts.
inline DscModel rebuild_dsc(const Checkpoint& c, const Vocabulary& vocab) {
  if (c.tag != "dsc")
    throw ArgumentError("rebuild_dsc: checkpoint tag is '" + c.tag + "'");
  KvConfig kv = parse_kv(c.config);
  DscConfig cfg;
  cfg.d_e = kv.get_size("d_e", 0);
  cfg.d_h = kv.get_size("d_h", 0);
  if (cfg.d_e == 0 || cfg.d_h == 0)
    throw IoError("dsc checkpoint config lacks dimensions");
  Rng scratch(0);
  DscModel m = make_dsc(vocab, leaf(c.tensor("embedding"), true), cfg, scratch);
  detail::restore_from_checkpoint(m.params, c);
  freeze(m);
  return m;
}

inline AscModel rebuild_asc(const Checkpoint& c, const Vocabulary& vocab) {
  if (c.tag != "asc" && c.tag != "atn-ag" && c.tag != "atn-af")
    throw ArgumentError("rebuild_asc: checkpoint tag is '" + c.tag + "'");
  KvConfig kv = parse_kv(c.config);
  AscConfig cfg;
  cfg.d_e = kv.get_size("d_e", 0);
  cfg.d_h = kv.get_size("d_h", 0);
  cfg.d_p = kv.get_size("d_p", 0);
  cfg.max_position = kv.get_size("max_position", 0);
  if (cfg.d_e == 0 || cfg.d_h == 0 || (cfg.d_p > 0 && cfg.max_position == 0))
    throw IoError("asc checkpoint config lacks dimensions");
  Rng scratch(0);
  AscModel m = make_asc(vocab, leaf(c.tensor("embedding"), true), cfg, scratch);
  if (c.tag == "atn-af")
    make_fusion_gate(m.params, scratch);  // placeholder values, restored next
  detail::restore_from_checkpoint(m.params, c);
  return m;
}

inline FusionGate gate_from_model(const AscModel& m) {
  return FusionGate{m.params.get("fusion.w_g")};
}

}  // namespace atn
