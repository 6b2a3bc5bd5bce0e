#include "blockflow/model_xml.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "blockflow/errors.hpp"

namespace blockflow {

namespace {

[[noreturn]] void malformed(const std::string& why) {
  throw Error(ErrorCode::MalformedXml, why);
}

struct XmlElement {
  std::string tag;
  std::map<std::string, std::string> attrs;
  bool self_closing = false;
  bool closing = false;  // </tag>
};

// Tiny scanner for the flat element soup this format uses. Handles the
// XML declaration, comments, attribute quoting, and the five standard
// entities; nothing more is needed here.
class XmlScanner {
 public:
  explicit XmlScanner(const std::string& text) : text_(text) {}

  // Returns the next element, or nullopt at end of input.
  std::optional<XmlElement> next() {
    skip_misc();
    if (pos_ >= text_.size()) return std::nullopt;
    if (text_[pos_] != '<') malformed("expected '<' at offset " + std::to_string(pos_));
    ++pos_;
    XmlElement el;
    if (peek() == '/') {
      ++pos_;
      el.closing = true;
    }
    el.tag = read_name();
    if (el.tag.empty()) malformed("missing tag name");
    for (;;) {
      skip_ws();
      char c = peek();
      if (c == '\0') malformed("unterminated element <" + el.tag);
      if (c == '>') {
        ++pos_;
        break;
      }
      if (c == '/') {
        ++pos_;
        if (peek() != '>') malformed("expected '/>' in <" + el.tag);
        ++pos_;
        el.self_closing = true;
        break;
      }
      if (el.closing) malformed("attributes on closing tag </" + el.tag);
      std::string name = read_name();
      if (name.empty()) malformed("bad attribute in <" + el.tag);
      skip_ws();
      if (peek() != '=') malformed("attribute '" + name + "' missing '='");
      ++pos_;
      skip_ws();
      char quote = peek();
      if (quote != '"' && quote != '\'') malformed("attribute '" + name + "' missing quote");
      ++pos_;
      std::string raw;
      while (pos_ < text_.size() && text_[pos_] != quote) raw += text_[pos_++];
      if (pos_ >= text_.size()) malformed("unterminated attribute value");
      ++pos_;
      if (!el.attrs.emplace(name, unescape(raw)).second)
        malformed("duplicate attribute '" + name + "'");
    }
    return el;
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void skip_misc() {
    for (;;) {
      skip_ws();
      if (text_.compare(pos_, 4, "<!--") == 0) {
        std::size_t end = text_.find("-->", pos_ + 4);
        if (end == std::string::npos) malformed("unterminated comment");
        pos_ = end + 3;
        continue;
      }
      if (text_.compare(pos_, 2, "<?") == 0) {
        std::size_t end = text_.find("?>", pos_ + 2);
        if (end == std::string::npos) malformed("unterminated declaration");
        pos_ = end + 2;
        continue;
      }
      return;
    }
  }

  std::string read_name() {
    std::string name;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' ||
          c == '.') {
        name += c;
        ++pos_;
      } else {
        break;
      }
    }
    return name;
  }

  std::string unescape(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out += raw[i];
        continue;
      }
      std::size_t semi = raw.find(';', i);
      if (semi == std::string::npos) malformed("bad entity");
      std::string ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "amp") out += '&';
      else if (ent == "lt") out += '<';
      else if (ent == "gt") out += '>';
      else if (ent == "quot") out += '"';
      else if (ent == "apos") out += '\'';
      else malformed("unknown entity &" + ent + ";");
      i = semi;
    }
    return out;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

double parse_double_attr(const std::string& value, const std::string& where) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    malformed("bad number '" + value + "' in " + where);
  return out;
}

std::uint64_t parse_u64_attr(const std::string& value, const std::string& where) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    malformed("bad non-negative integer '" + value + "' in " + where);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string escape(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const std::string& require_attr(const XmlElement& el, const std::string& name) {
  auto it = el.attrs.find(name);
  if (it == el.attrs.end())
    malformed("<" + el.tag + "> missing attribute '" + name + "'");
  return it->second;
}

}  // namespace

BlockGraph parse_model(const std::string& text) {
  XmlScanner scanner(text);
  auto root = scanner.next();
  if (!root || root->tag != "model" || root->closing)
    malformed("expected <model> root element");
  BlockGraph g;
  g.name = root->attrs.count("name") ? root->attrs.at("name") : "";

  bool closed = root->self_closing;
  while (!closed) {
    auto el = scanner.next();
    if (!el) malformed("missing </model>");
    if (el->closing) {
      if (el->tag != "model") malformed("unexpected </" + el->tag + ">");
      closed = true;
      break;
    }
    if (el->tag == "block") {
      if (!el->self_closing) malformed("<block> must be self-closing");
      Block b;
      b.id = require_attr(*el, "id");
      const std::string& kind = require_attr(*el, "kind");
      auto k = block_kind_from_name(kind);
      if (!k) throw Error(ErrorCode::UnknownKind, "block '" + b.id + "' kind '" + kind + "'");
      b.kind = *k;
      if (b.kind == BlockKind::Const)
        b.const_value = parse_double_attr(require_attr(*el, "c"), "block " + b.id);
      if (b.kind == BlockKind::Gain)
        b.gain = parse_double_attr(require_attr(*el, "k"), "block " + b.id);
      if (b.kind == BlockKind::Compute)
        b.weight = parse_u64_attr(require_attr(*el, "w"), "block " + b.id);
      g.blocks.push_back(std::move(b));
    } else if (el->tag == "edge") {
      if (!el->self_closing) malformed("<edge> must be self-closing");
      Edge e;
      e.src = require_attr(*el, "src");
      e.dst = require_attr(*el, "dst");
      e.dst_port = static_cast<std::uint32_t>(
          parse_u64_attr(require_attr(*el, "port"), "edge " + e.src + "->" + e.dst));
      g.edges.push_back(std::move(e));
    } else {
      malformed("unexpected element <" + el->tag + ">");
    }
  }
  if (scanner.next()) malformed("content after </model>");

  std::set<std::string> ids;
  for (const Block& b : g.blocks)
    if (!ids.insert(b.id).second) malformed("duplicate block id '" + b.id + "'");
  std::set<std::pair<std::string, std::uint32_t>> ports;
  for (const Edge& e : g.edges) {
    if (!ids.count(e.src))
      throw Error(ErrorCode::DanglingEdge, e.src + "->" + e.dst + " (missing src)");
    if (!ids.count(e.dst))
      throw Error(ErrorCode::DanglingEdge, e.src + "->" + e.dst + " (missing dst)");
    if (!ports.emplace(e.dst, e.dst_port).second)
      throw Error(ErrorCode::PortConflict,
                  e.dst + "#" + std::to_string(e.dst_port) + " bound twice");
  }
  return g;
}

std::string serialize_model(const BlockGraph& g) {
  std::vector<const Block*> blocks;
  for (const Block& b : g.blocks) blocks.push_back(&b);
  std::sort(blocks.begin(), blocks.end(),
            [](const Block* a, const Block* b) { return a->id < b->id; });
  std::vector<const Edge*> edges;
  for (const Edge& e : g.edges) edges.push_back(&e);
  std::sort(edges.begin(), edges.end(), [](const Edge* a, const Edge* b) {
    return std::tie(a->src, a->dst, a->dst_port) < std::tie(b->src, b->dst, b->dst_port);
  });

  std::ostringstream out;
  out << "<model name=\"" << escape(g.name) << "\">\n";
  for (const Block* b : blocks) {
    out << "  <block id=\"" << escape(b->id) << "\" kind=\"" << block_kind_name(b->kind)
        << "\"";
    if (b->kind == BlockKind::Const) out << " c=\"" << format_double(b->const_value) << "\"";
    if (b->kind == BlockKind::Gain) out << " k=\"" << format_double(b->gain) << "\"";
    if (b->kind == BlockKind::Compute) out << " w=\"" << b->weight << "\"";
    out << "/>\n";
  }
  for (const Edge* e : edges) {
    out << "  <edge src=\"" << escape(e->src) << "\" dst=\"" << escape(e->dst) << "\" port=\""
        << e->dst_port << "\"/>\n";
  }
  out << "</model>\n";
  return out.str();
}

BlockGraph load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

void save_model_file(const BlockGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << serialize_model(g);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace blockflow
