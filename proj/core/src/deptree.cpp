#include "synparse/deptree.hpp"

#include <cfloat>
#include <cmath>
#include <fstream>
#include <sstream>

#include "synparse/error.hpp"

namespace synparse {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(std::move(tok));
  return out;
}

std::size_t check_tree(const std::vector<std::size_t>& heads,
                       const std::vector<std::size_t>& lines) {
  // Returns the root index; `lines` gives a source line per token for error
  // messages (token index used when absent).
  auto line_of = [&](std::size_t i) {
    return lines.empty() ? i + 1 : lines[i];
  };
  std::size_t root = heads.size();
  for (std::size_t i = 0; i < heads.size(); ++i) {
    if (heads[i] >= heads.size()) {
      throw FormatError("line " + std::to_string(line_of(i)) + ": head " +
                        std::to_string(heads[i] + 1) + " out of range for sentence of " +
                        std::to_string(heads.size()) + " tokens");
    }
    if (heads[i] == i) {
      if (root != heads.size()) {
        throw FormatError("line " + std::to_string(line_of(i)) +
                          ": second root in one sentence");
      }
      root = i;
    }
  }
  if (root == heads.size()) {
    throw FormatError("line " + std::to_string(line_of(0)) + ": sentence has no root");
  }
  for (std::size_t i = 0; i < heads.size(); ++i) {
    std::size_t cur = i, steps = 0;
    while (cur != root) {
      cur = heads[cur];
      if (++steps > heads.size()) {
        throw FormatError("line " + std::to_string(line_of(i)) +
                          ": head cycle does not reach the root");
      }
    }
  }
  return root;
}

}  // namespace

void validate_sentence(const Sentence& s) {
  if (s.heads.size() != s.tokens.size()) {
    throw DataError("sentence has " + std::to_string(s.tokens.size()) + " tokens but " +
                    std::to_string(s.heads.size()) + " heads");
  }
  if (s.tokens.empty()) throw DataError("empty sentence");
  try {
    check_tree(s.heads, {});
  } catch (const FormatError& e) {
    throw DataError(e.what());
  }
}

DistanceMatrix distance_matrix(const Sentence& s, double sigma) {
  if (!(sigma > 0.0)) {
    throw ConfigError("distance_matrix: sigma must be positive, got " + std::to_string(sigma));
  }
  validate_sentence(s);
  const std::size_t n = s.size();
  DistanceMatrix d;
  d.n = n;
  d.values.assign(n * n, 0.0);
  const double norm = 1.0 / (sigma * std::sqrt(kTwoPi));
  for (std::size_t t = 0; t < n; ++t) {
    const double mean = static_cast<double>(s.heads[t]);
    for (std::size_t col = 0; col < n; ++col) {
      const double delta = static_cast<double>(col) - mean;
      double v = norm * std::exp(-(delta * delta) / (2.0 * sigma * sigma));
      if (v < DBL_MIN) v = DBL_MIN;  // keep every entry strictly positive
      d.values[t * n + col] = v;
    }
  }
  return d;
}

DistanceMatrix symmetrize(const DistanceMatrix& d) {
  if (d.values.size() != d.n * d.n) {
    throw DimensionError("symmetrize: matrix storage does not match n=" + std::to_string(d.n));
  }
  DistanceMatrix out;
  out.n = d.n;
  out.values.assign(d.n * d.n, 0.0);
  for (std::size_t i = 0; i < d.n; ++i) {
    out.values[i * d.n + i] = d.values[i * d.n + i];
    for (std::size_t j = i + 1; j < d.n; ++j) {
      const double m = (d.values[i * d.n + j] + d.values[j * d.n + i]) / 2.0;
      out.values[i * d.n + j] = m;
      out.values[j * d.n + i] = m;
    }
  }
  return out;
}

std::vector<Sentence> parse_conll(std::istream& in) {
  std::vector<Sentence> out;
  Sentence cur;
  std::vector<std::size_t> token_lines;
  std::vector<long> raw_heads;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (cur.tokens.empty()) return;
    cur.heads.resize(raw_heads.size());
    for (std::size_t i = 0; i < raw_heads.size(); ++i) {
      // HEAD=0 marks the root; the in-memory convention is a self-loop.
      cur.heads[i] = raw_heads[i] == 0 ? i : static_cast<std::size_t>(raw_heads[i] - 1);
    }
    check_tree(cur.heads, token_lines);
    out.push_back(std::move(cur));
    cur = Sentence{};
    token_lines.clear();
    raw_heads.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;
    std::vector<std::string> cols = split_ws(line);
    std::string head_col;
    if (cols.size() == 3) {
      head_col = cols[2];
    } else if (cols.size() >= 7) {
      head_col = cols[6];
    } else {
      throw FormatError("line " + std::to_string(line_no) + ": expected 3 or >= 7 columns, got " +
                        std::to_string(cols.size()));
    }
    std::size_t id = 0;
    try {
      id = static_cast<std::size_t>(std::stoul(cols[0]));
    } catch (const std::exception&) {
      throw FormatError("line " + std::to_string(line_no) + ": bad token id '" + cols[0] + "'");
    }
    if (id != cur.tokens.size() + 1) {
      throw FormatError("line " + std::to_string(line_no) + ": token id " + std::to_string(id) +
                        " out of sequence (expected " + std::to_string(cur.tokens.size() + 1) +
                        ")");
    }
    long head = 0;
    try {
      head = std::stol(head_col);
    } catch (const std::exception&) {
      throw FormatError("line " + std::to_string(line_no) + ": bad head '" + head_col + "'");
    }
    if (head < 0) {
      throw FormatError("line " + std::to_string(line_no) + ": negative head");
    }
    cur.tokens.push_back(cols[1]);
    raw_heads.push_back(head);
    token_lines.push_back(line_no);
  }
  flush();
  return out;
}

std::vector<Sentence> parse_conll_text(const std::string& text) {
  std::istringstream is(text);
  return parse_conll(is);
}

std::vector<Sentence> parse_conll_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  return parse_conll(f);
}

void serialize_conll(const std::vector<Sentence>& sentences, std::ostream& out) {
  for (const Sentence& s : sentences) {
    validate_sentence(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::size_t head = s.heads[i] == i ? 0 : s.heads[i] + 1;
      out << (i + 1) << '\t' << s.tokens[i] << "\t_\t_\t_\t_\t" << head << "\t_\t_\t_\n";
    }
    out << '\n';
  }
}

std::string serialize_conll_text(const std::vector<Sentence>& sentences) {
  std::ostringstream os;
  serialize_conll(sentences, os);
  return os.str();
}

void serialize_conll_file(const std::vector<Sentence>& sentences, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  serialize_conll(sentences, f);
}

}  // namespace synparse
