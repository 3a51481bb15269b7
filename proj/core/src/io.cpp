#include "raretraj/io.hpp"

#include <cstdio>
#include <map>
#include <stdexcept>
#include <tuple>

namespace raretraj {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> header)
    : out_(path), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& h : header) *this << h;
  end_row();
}

void CsvWriter::sep() {
  if (col_ > 0) out_ << ',';
  ++col_;
}

CsvWriter& CsvWriter::operator<<(double v) {
  sep();
  out_ << format_number(v);
  return *this;
}

CsvWriter& CsvWriter::operator<<(long long v) {
  sep();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& s) {
  sep();
  out_ << s;
  return *this;
}

void CsvWriter::end_row() {
  if (col_ != columns_) throw std::logic_error("CSV row has " + std::to_string(col_) + " fields, header has " + std::to_string(columns_));
  out_ << '\n';
  col_ = 0;
}

void write_cell_table(const std::filesystem::path& path, const CellTable& table, const std::string& value_name, int t_end) {
  CsvWriter csv(path, {"t", "x", value_name});
  for (int t = 0; t < t_end; ++t)
    for (int x = -t; x <= t; x += 2) {
      csv << t << x << table(x, t);
      csv.end_row();
    }
}

void write_metrics(const std::filesystem::path& path, const std::vector<BatchMetrics>& metrics, bool with_ema) {
  std::vector<double> ret, rwb;
  for (const auto& m : metrics) {
    ret.push_back(m.mean_return);
    rwb.push_back(m.rwb_fraction);
  }
  const auto ema_ret = ema(ret);
  const auto ema_rwb = ema(rwb);
  if (with_ema) {
    CsvWriter csv(path, {"batch", "mean_return", "rwb_fraction", "distinct_rwb", "ema_return", "ema_rwb"});
    for (std::size_t i = 0; i < metrics.size(); ++i) {
      csv << metrics[i].batch << metrics[i].mean_return << metrics[i].rwb_fraction << metrics[i].distinct_rwb << ema_ret[i]
          << ema_rwb[i];
      csv.end_row();
    }
  } else {
    CsvWriter csv(path, {"batch", "mean_return", "rwb_fraction", "distinct_rwb"});
    for (const auto& m : metrics) {
      csv << m.batch << m.mean_return << m.rwb_fraction << m.distinct_rwb;
      csv.end_row();
    }
  }
}

void write_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& trajs) {
  CsvWriter csv(path, {"episode", "t", "x"});
  for (std::size_t e = 0; e < trajs.size(); ++e)
    for (std::size_t t = 0; t < trajs[e].positions.size(); ++t) {
      csv << static_cast<long long>(e) << static_cast<long long>(t) << trajs[e].positions[t];
      csv.end_row();
    }
}

std::vector<EdgeCount> edge_counts(const std::vector<Trajectory>& trajs) {
  std::map<std::tuple<int, int, int>, int> counts;
  for (const auto& tr : trajs)
    for (std::size_t t = 0; t + 1 < tr.positions.size(); ++t) ++counts[{static_cast<int>(t), tr.positions[t], tr.positions[t + 1]}];
  std::vector<EdgeCount> out;
  for (const auto& [k, c] : counts) out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), c});
  return out;
}

void write_edges(const std::filesystem::path& path, const std::vector<EdgeCount>& edges) {
  CsvWriter csv(path, {"t", "x_from", "x_to", "count"});
  for (const auto& e : edges) {
    csv << e.t << e.x_from << e.x_to << e.count;
    csv.end_row();
  }
}

}  // namespace raretraj
