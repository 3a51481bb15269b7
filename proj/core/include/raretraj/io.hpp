#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "raretraj/oracle.hpp"
#include "raretraj/trainer.hpp"

namespace raretraj {

/// Minimal CSV writer. Numbers are printed with %.10g so reruns are byte-identical.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> header);

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(long long v);
  CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
  CsvWriter& operator<<(const std::string& s);
  void end_row();

 private:
  void sep();
  std::ofstream out_;
  std::size_t columns_;
  std::size_t col_ = 0;
};

std::string format_number(double v);

/// t, x, <value_name> over the reachable cone, t in [0, t_end).
void write_cell_table(const std::filesystem::path& path, const CellTable& table, const std::string& value_name, int t_end);

/// batch, mean_return, rwb_fraction, distinct_rwb[, ema_return, ema_rwb]
void write_metrics(const std::filesystem::path& path, const std::vector<BatchMetrics>& metrics, bool with_ema);

/// episode, t, x
void write_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& trajs);

/// Traversal counts of every (t, x) -> (t + 1, x') edge.
struct EdgeCount {
  int t;
  int x_from;
  int x_to;
  int count;
};
std::vector<EdgeCount> edge_counts(const std::vector<Trajectory>& trajs);
void write_edges(const std::filesystem::path& path, const std::vector<EdgeCount>& edges);

}  // namespace raretraj
