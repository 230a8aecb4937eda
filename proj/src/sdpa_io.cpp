#include "peakbound/sdpa_io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace peakbound {

namespace {

const double kSqrt2 = std::sqrt(2.0);

struct Fmt {
  char buf[64];
  const char* operator()(double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
};

// svec index -> (i, j) lookup for one block side.
std::vector<std::pair<int, int>> svec_pairs(int side) {
  std::vector<std::pair<int, int>> p;
  p.reserve(size_t(side) * (side + 1) / 2);
  for (int i = 0; i < side; ++i)
    for (int j = i; j < side; ++j) p.emplace_back(i, j);
  return p;
}

}  // namespace

void write_sdpa(std::ostream& os, const SDPInstance& inst) {
  Fmt fmt;
  const long nf = inst.free_count;
  const long nn = inst.nonneg_count;
  const long diag = nn + 2 * nf;
  const int npsd = static_cast<int>(inst.psd_sides.size());
  const int nblock = npsd + (diag > 0 ? 1 : 0);

  os << inst.rows.size() << "\n" << nblock << "\n";
  for (int b = 0; b < npsd; ++b) os << (b ? " " : "") << inst.psd_sides[b];
  if (diag > 0) os << (npsd ? " " : "") << -diag;
  if (nblock == 0) os << 0;
  os << "\n";
  for (size_t i = 0; i < inst.rows.size(); ++i)
    os << (i ? " " : "") << fmt(inst.rows[i].rhs);
  os << "\n";

  // column -> (block, i, j, scale from svec to matrix entry)
  std::vector<std::vector<std::pair<int, int>>> pairs;
  for (int s : inst.psd_sides) pairs.push_back(svec_pairs(s));

  auto emit = [&](long matno, long col, double v) {
    if (v == 0.0) return;
    if (col < nf) {
      // free column: difference of two nonnegative diagonal entries
      long p = nn + col + 1, q = nn + nf + col + 1;
      os << matno << " " << npsd + 1 << " " << p << " " << p << " " << fmt(v) << "\n";
      os << matno << " " << npsd + 1 << " " << q << " " << q << " " << fmt(-v) << "\n";
    } else if (col < nf + nn) {
      long p = col - nf + 1;
      os << matno << " " << npsd + 1 << " " << p << " " << p << " " << fmt(v) << "\n";
    } else {
      int b = 0;
      while (b + 1 < npsd && inst.psd_offsets[b + 1] <= col) ++b;
      auto [i, j] = pairs[b][col - inst.psd_offsets[b]];
      double full = (i == j) ? v : v / kSqrt2;
      os << matno << " " << b + 1 << " " << i + 1 << " " << j + 1 << " " << fmt(full) << "\n";
    }
  };

  for (long col = 0; col < static_cast<long>(inst.c.size()); ++col)
    emit(0, col, -inst.c[col]);
  for (size_t r = 0; r < inst.rows.size(); ++r)
    for (const auto& [col, v] : inst.rows[r].entries) emit(long(r) + 1, col, v);
}

std::string to_sdpa(const SDPInstance& inst) {
  std::ostringstream os;
  write_sdpa(os, inst);
  return os.str();
}

SDPInstance read_sdpa(std::istream& is) {
  // Normalize: drop comment lines, turn allowed separators into spaces.
  std::string text, line;
  while (std::getline(is, line)) {
    size_t p = line.find_first_not_of(" \t\r");
    if (p != std::string::npos && (line[p] == '*' || line[p] == '"')) continue;
    for (char& ch : line)
      if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')') ch = ' ';
    text += line;
    text += ' ';
  }
  std::istringstream in(text);

  long m = 0, nblock = 0;
  if (!(in >> m >> nblock) || m < 0 || nblock < 0)
    throw std::runtime_error("sdpa: bad header");
  std::vector<long> bs(nblock);
  for (auto& v : bs)
    if (!(in >> v)) throw std::runtime_error("sdpa: bad block structure");

  SDPInstance inst;
  inst.free_count = 0;
  // Column layout per block, honoring the nonneg-before-psd convention.
  struct BlockMap {
    bool diagonal;
    long base;  // nonneg start index or psd block index
    int side;
  };
  std::vector<BlockMap> blocks(nblock);
  long nn = 0;
  for (long b = 0; b < nblock; ++b) {
    if (bs[b] == 0) throw std::runtime_error("sdpa: zero block");
    if (bs[b] < 0) {
      blocks[b] = {true, nn, static_cast<int>(-bs[b])};
      nn += -bs[b];
    }
  }
  inst.nonneg_count = nn;
  long col = nn;
  for (long b = 0; b < nblock; ++b) {
    if (bs[b] > 0) {
      blocks[b] = {false, col, static_cast<int>(bs[b])};
      inst.psd_sides.push_back(static_cast<int>(bs[b]));
      inst.psd_offsets.push_back(col);
      col += bs[b] * (bs[b] + 1) / 2;
    }
  }
  inst.c.assign(col, 0.0);
  inst.rows.assign(m, {});
  for (long r = 0; r < m; ++r)
    if (!(in >> inst.rows[r].rhs)) throw std::runtime_error("sdpa: bad objective vector");

  // accumulate entries through maps, then flatten
  std::vector<std::map<long, double>> rowmaps(m);
  long matno, blk;
  long i, j;
  double v;
  while (in >> matno >> blk >> i >> j >> v) {
    if (matno < 0 || matno > m || blk < 1 || blk > nblock)
      throw std::runtime_error("sdpa: entry out of range");
    const BlockMap& bm = blocks[blk - 1];
    if (i < 1 || j < 1 || i > bm.side || j > bm.side)
      throw std::runtime_error("sdpa: entry index out of range");
    if (i > j) std::swap(i, j);
    long column;
    double sv;
    if (bm.diagonal) {
      if (i != j) throw std::runtime_error("sdpa: off-diagonal entry in diagonal block");
      column = bm.base + i - 1;
      sv = v;
    } else {
      long side = bm.side;
      long k = (i - 1) * side - (i - 1) * (i - 2) / 2 + (j - i);
      column = bm.base + k;
      sv = (i == j) ? v : v * kSqrt2;
    }
    if (matno == 0)
      inst.c[column] -= sv;  // F0 holds the negated objective
    else
      rowmaps[matno - 1][column] += sv;
  }
  if (!in.eof() && in.fail()) {
    in.clear();
    std::string tail;
    if (in >> tail) throw std::runtime_error("sdpa: malformed entry near '" + tail + "'");
  }
  for (long r = 0; r < m; ++r) {
    inst.rows[r].entries.assign(rowmaps[r].begin(), rowmaps[r].end());
    for (auto it = inst.rows[r].entries.begin(); it != inst.rows[r].entries.end();)
      it = (it->second == 0.0) ? inst.rows[r].entries.erase(it) : std::next(it);
  }
  inst.recovery.decision_slots = 0;
  return inst;
}

SDPInstance read_sdpa_string(const std::string& text) {
  std::istringstream is(text);
  return read_sdpa(is);
}

}  // namespace peakbound
