// Copyright 2026 The captune Authors
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

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "captune/evalkit/metrics.hpp"

namespace captune::evalkit {

/// Shortest decimal form that parses back to the same double.
std::string format_number(double v);

/// One labelled retrieval result, e.g. ("trained", "toy-pt", evaluation).
struct RetrievalRow {
  std::string run;
  std::string dataset;
  RetrievalReport report;
};

/// Columns: run,dataset,direction,r1,r5,r10,mean_recall,queries. Lines that
/// start with '#' are comments and are emitted first.
std::string retrieval_csv(const std::vector<RetrievalRow>& rows,
                          const std::vector<std::string>& comments = {});
/// Inverse of retrieval_csv; comment lines are returned through `comments`.
std::vector<RetrievalRow> parse_retrieval_csv(std::string_view text,
                                              std::vector<std::string>* comments = nullptr);

/// Confusion counts as a CSV grid with a header row of predicted classes.
std::string confusion_csv(const ClassificationReport& report,
                          const std::vector<std::string>& class_names, bool normalized);

/// GitHub-style table; every row must have as many cells as the header.
std::string markdown_table(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows);

/// Horizontal bar chart with a zero axis; negative values extend left.
std::string svg_bar_chart(std::string_view title, const std::vector<std::string>& labels,
                          const std::vector<double>& values);

}  // namespace captune::evalkit
