// src/eval/report.cc

// Copyright 2026  The crossemo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cstdio>
#include <set>

#include "crossemo/base/error.h"
#include "crossemo/eval/eval.h"

namespace crossemo {

namespace {

constexpr int kReportSchemaVersion = 1;

std::vector<std::string> Ordered(const std::set<std::string> &tags,
                                 const std::vector<std::string> &preferred) {
  std::vector<std::string> out;
  for (const auto &t : preferred) {
    if (tags.count(t) && std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  }
  for (const auto &t : tags) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  }
  return out;
}

std::string Fixed(double v, int digits = 1) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::optional<double> MeanOf(const std::vector<double> &v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Json OptionalJson(const std::optional<double> &v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

CrossCorpusReport BuildCrossMatrix(const std::vector<RunResult> &runs, const ReportOptions &options) {
  CrossCorpusReport report;
  report.options = options;
  std::set<std::string> train_tags, test_tags;
  std::map<std::pair<std::string, std::string>, std::map<int, MetricSet>> grouped;
  for (const auto &r : runs) {
    train_tags.insert(r.train_tag);
    test_tags.insert(r.test_tag);
    auto &folds = grouped[{r.train_tag, r.test_tag}];
    if (!folds.emplace(r.fold, r.metrics).second)
      throw Error(ErrorCode::kBadConfig, "duplicate run for train '" + r.train_tag + "', test '" +
                                             r.test_tag + "', fold " + std::to_string(r.fold));
  }
  for (const auto &t : options.column_order) train_tags.insert(t);
  for (const auto &t : options.row_order) test_tags.insert(t);
  report.columns = Ordered(train_tags, options.column_order);
  report.rows = Ordered(test_tags, options.row_order);

  int expected = options.expected_folds;
  if (expected <= 0) {
    std::set<int> all_folds;
    for (const auto &[_, folds] : grouped)
      for (const auto &[f, __] : folds) all_folds.insert(f);
    expected = static_cast<int>(all_folds.size());
  }
  report.expected_folds = expected;

  std::map<std::string, std::vector<double>> matched, mismatched;
  for (const auto &col : report.columns) {
    std::map<std::string, std::vector<double>> column_values;
    for (const auto &row : report.rows) {
      ReportCell cell;
      cell.matched = col == row;
      auto it = grouped.find({col, row});
      if (it != grouped.end()) {
        for (const auto &[f, _] : it->second) cell.folds.push_back(f);
        for (const auto &metric : MetricNames()) {
          std::vector<double> values;
          for (const auto &[_, m] : it->second) values.push_back(m.Get(metric));
          cell.metrics[metric] = AggregateFolds(values);
        }
      }
      cell.complete = static_cast<int>(cell.folds.size()) >= expected && !cell.folds.empty();
      if (!cell.complete) {
        report.flags.push_back("MissingFold: train '" + col + "' test '" + row + "' has " +
                               std::to_string(cell.folds.size()) + " of " +
                               std::to_string(expected) + " folds");
      } else {
        for (const auto &metric : MetricNames()) {
          const double mean = cell.metrics[metric].mean;
          column_values[metric].push_back(mean);
          (cell.matched ? matched : mismatched)[metric].push_back(mean);
        }
      }
      report.cells[{col, row}] = std::move(cell);
    }
    for (const auto &metric : MetricNames())
      report.column_average[col][metric] = MeanOf(column_values[metric]);
  }
  for (const auto &metric : MetricNames()) {
    report.matched_average[metric] = MeanOf(matched[metric]);
    report.mismatched_average[metric] = MeanOf(mismatched[metric]);
  }
  return report;
}

Json CrossCorpusReport::ToJson() const {
  Json cells_json = Json::array();
  for (const auto &col : columns) {
    for (const auto &row : rows) {
      const ReportCell &c = cells.at({col, row});
      Json metrics = Json::object();
      for (const auto &[name, agg] : c.metrics)
        metrics[name] = {{"mean", agg.mean}, {"std", OptionalJson(agg.std)}};
      cells_json.push_back({{"train", col},
                            {"test", row},
                            {"matched", c.matched},
                            {"folds", c.folds},
                            {"complete", c.complete},
                            {"metrics", metrics}});
    }
  }
  Json avg = Json::object();
  for (const auto &[col, per_metric] : column_average)
    for (const auto &[m, v] : per_metric) avg[col][m] = OptionalJson(v);
  Json matched_json = Json::object(), mismatched_json = Json::object();
  for (const auto &[m, v] : matched_average) matched_json[m] = OptionalJson(v);
  for (const auto &[m, v] : mismatched_average) mismatched_json[m] = OptionalJson(v);
  return Json{{"schema_version", kReportSchemaVersion},
              {"title", options.title},
              {"columns", columns},
              {"rows", rows},
              {"expected_folds", expected_folds},
              {"cells", cells_json},
              {"column_average", avg},
              {"matched_average", matched_json},
              {"mismatched_average", mismatched_json},
              {"flags", flags},
              {"std", "population"},
              {"model_selection", options.model_selection},
              {"restrict_classes", options.restrict_classes}};
}

std::string CrossCorpusReport::ToCsv() const {
  std::string out = "train,test,matched,folds,complete,metric,mean,std\n";
  for (const auto &col : columns) {
    for (const auto &row : rows) {
      const ReportCell &c = cells.at({col, row});
      for (const auto &metric : MetricNames()) {
        out += col + "," + row + "," + (c.matched ? "1" : "0") + "," +
               std::to_string(c.folds.size()) + "," + (c.complete ? "1" : "0") + "," + metric + ",";
        auto it = c.metrics.find(metric);
        if (it != c.metrics.end()) {
          out += Fixed(it->second.mean, 4) + "," + (it->second.std ? Fixed(*it->second.std, 4) : "");
        } else {
          out += ",";
        }
        out += "\n";
      }
    }
  }
  return out;
}

std::string CrossCorpusReport::ToTable(const std::string &metric) const {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header = {"Test \\ Train"};
  header.insert(header.end(), columns.begin(), columns.end());
  grid.push_back(header);
  for (const auto &row : rows) {
    std::vector<std::string> line = {row};
    for (const auto &col : columns) {
      const ReportCell &c = cells.at({col, row});
      std::string text;
      if (!c.complete) {
        text = "MissingFold(" + std::to_string(c.folds.size()) + "/" +
               std::to_string(expected_folds) + ")";
      } else {
        const FoldAggregate &a = c.metrics.at(metric);
        text = Fixed(a.mean) + (a.std ? " (" + Fixed(*a.std) + ")" : "");
        if (c.matched) text = "**" + text + "**";
      }
      line.push_back(text);
    }
    grid.push_back(line);
  }
  std::vector<std::string> avg = {"Avg"};
  for (const auto &col : columns) {
    const auto &v = column_average.at(col).at(metric);
    avg.push_back(v ? Fixed(*v) : "n/a");
  }
  grid.push_back(avg);

  std::vector<size_t> width(grid[0].size(), 0);
  for (const auto &line : grid)
    for (size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  auto render = [&](const std::vector<std::string> &line) {
    std::string s = "|";
    for (size_t i = 0; i < line.size(); ++i)
      s += " " + line[i] + std::string(width[i] - line[i].size(), ' ') + " |";
    return s + "\n";
  };
  std::string out = options.title + ": " + metric + " (%)\n\n" + render(grid[0]);
  std::string rule = "|";
  for (size_t w : width) rule += std::string(w + 2, '-') + "|";
  out += rule + "\n";
  for (size_t i = 1; i < grid.size(); ++i) out += render(grid[i]);

  auto count = [&](bool want_matched) {
    size_t n = 0;
    for (const auto &[key, c] : cells) n += c.complete && c.matched == want_matched;
    return n;
  };
  const auto &m = matched_average.at(metric);
  const auto &mm = mismatched_average.at(metric);
  out += "\nMatched average: " + (m ? Fixed(*m) : std::string("n/a")) + " over " +
         std::to_string(count(true)) + " matched conditions\n";
  out += "Mismatched average: " + (mm ? Fixed(*mm) : std::string("n/a")) + " over " +
         std::to_string(count(false)) + " mismatched conditions\n";
  out += "\nCells: fold mean (population std over " + std::to_string(expected_folds) +
         " folds); **bold** = matched condition (train set = test set).\n";
  out += "Metrics: ua = one-vs-rest mean of (tp+tn)/(tp+tn+fp+fn); "
         "wa = one-vs-rest mean of (tp/(tp+fn) + tn/(tn+fp))/2; "
         "mean_class_recall; overall_accuracy.\n";
  if (!options.model_selection.empty()) out += "Model selection: " + options.model_selection + "\n";
  if (options.restrict_classes) out += "Argmax restricted to classes present in each test set.\n";
  for (const auto &f : flags) out += f + "\n";
  return out;
}

}  // namespace crossemo
