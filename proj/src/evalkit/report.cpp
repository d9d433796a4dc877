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

#include "captune/evalkit/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "captune/error.hpp"

namespace captune::evalkit {

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.emplace_back(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("not a number: '" + s + "'", line);
  }
  return v;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw InternalError("number formatting failed");
  return std::string(buf, ptr);
}

std::string retrieval_csv(const std::vector<RetrievalRow>& rows,
                          const std::vector<std::string>& comments) {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  out += "run,dataset,direction,r1,r5,r10,mean_recall,queries\n";
  for (const auto& r : rows) {
    if (r.report.ks != std::vector<std::size_t>{1, 5, 10}) {
      throw ContractError("retrieval CSV rows must use K = 1, 5, 10");
    }
    if (r.run.find(',') != std::string::npos || r.dataset.find(',') != std::string::npos) {
      throw ContractError("run and dataset labels must not contain commas");
    }
    out += r.run + "," + r.dataset + "," + std::string(direction_name(r.report.direction));
    for (double v : r.report.recall) out += "," + format_number(v);
    out += "," + format_number(r.report.mean_recall) + "," + std::to_string(r.report.queries) + "\n";
  }
  return out;
}

std::vector<RetrievalRow> parse_retrieval_csv(std::string_view text,
                                              std::vector<std::string>* comments) {
  std::vector<RetrievalRow> rows;
  std::istringstream ss{std::string(text)};
  std::size_t line_no = 0;
  bool header = false;
  for (std::string line; std::getline(ss, line);) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      if (comments != nullptr) comments->push_back(line.substr(2));
      continue;
    }
    if (!header) {
      if (line != "run,dataset,direction,r1,r5,r10,mean_recall,queries") {
        throw ParseError("unexpected retrieval CSV header", line_no);
      }
      header = true;
      continue;
    }
    const auto cells = split_csv_line(line);
    if (cells.size() != 8) throw ParseError("expected 8 columns", line_no);
    RetrievalRow r;
    r.run = cells[0];
    r.dataset = cells[1];
    if (cells[2] == "txt2img") {
      r.report.direction = RetrievalDirection::kTextToImage;
    } else if (cells[2] == "img2txt") {
      r.report.direction = RetrievalDirection::kImageToText;
    } else {
      throw ParseError("unknown direction '" + cells[2] + "'", line_no);
    }
    for (std::size_t i = 3; i < 6; ++i) r.report.recall.push_back(parse_double(cells[i], line_no));
    r.report.mean_recall = parse_double(cells[6], line_no);
    r.report.queries = static_cast<std::size_t>(parse_double(cells[7], line_no));
    rows.push_back(std::move(r));
  }
  if (!header) throw ParseError("missing retrieval CSV header", line_no);
  return rows;
}

std::string confusion_csv(const ClassificationReport& report,
                          const std::vector<std::string>& class_names, bool normalized) {
  const std::size_t n = report.confusion.size();
  if (class_names.size() != n) {
    throw ContractError(std::to_string(class_names.size()) + " class names for " +
                        std::to_string(n) + " classes");
  }
  std::string out = "label\\prediction";
  for (const auto& c : class_names) out += "," + c;
  out += "\n";
  for (std::size_t i = 0; i < n; ++i) {
    out += class_names[i];
    for (std::size_t j = 0; j < n; ++j) {
      out += ",";
      out += normalized ? format_number(report.normalized[i][j])
                        : std::to_string(report.confusion[i][j]);
    }
    out += "\n";
  }
  return out;
}

std::string markdown_table(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows) {
  auto line = [](const std::vector<std::string>& cells) {
    std::string s = "|";
    for (const auto& c : cells) s += " " + c + " |";
    return s + "\n";
  };
  std::string out = line(header);
  out += "|";
  for (std::size_t i = 0; i < header.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
  out += "\n";
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw ContractError("markdown row width mismatch");
    out += line(r);
  }
  return out;
}

std::string svg_bar_chart(std::string_view title, const std::vector<std::string>& labels,
                          const std::vector<double>& values) {
  if (labels.size() != values.size()) throw ContractError("one value per label required");
  constexpr int kLabelWidth = 220;
  constexpr int kPlotWidth = 400;
  constexpr int kBar = 22;
  constexpr int kTop = 40;
  double extent = 1.0;
  for (double v : values) extent = std::max(extent, std::abs(v));
  const bool has_negative = std::any_of(values.begin(), values.end(), [](double v) { return v < 0; });
  const double zero_x = kLabelWidth + (has_negative ? kPlotWidth / 2.0 : 0.0);
  const double scale = (has_negative ? kPlotWidth / 2.0 : kPlotWidth) / extent;
  const int height = kTop + static_cast<int>(values.size()) * (kBar + 6) + 20;
  const int width = kLabelWidth + kPlotWidth + 80;

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<text x=\"10\" y=\"20\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int y = kTop + static_cast<int>(i) * (kBar + 6);
    const double w = std::abs(values[i]) * scale;
    const double x = values[i] < 0 ? zero_x - w : zero_x;
    s << "<text x=\"" << kLabelWidth - 8 << "\" y=\"" << y + kBar - 6
      << "\" text-anchor=\"end\">" << xml_escape(labels[i]) << "</text>\n";
    s << "<rect x=\"" << format_number(x) << "\" y=\"" << y << "\" width=\"" << format_number(w)
      << "\" height=\"" << kBar << "\" fill=\"" << (values[i] < 0 ? "#c0504d" : "#4f81bd")
      << "\"/>\n";
    s << "<text x=\"" << format_number(values[i] < 0 ? zero_x + 4 : zero_x + w + 4) << "\" y=\""
      << y + kBar - 6 << "\">" << format_number(std::round(values[i] * 100.0) / 100.0)
      << "</text>\n";
  }
  s << "<line x1=\"" << format_number(zero_x) << "\" y1=\"" << kTop - 4 << "\" x2=\""
    << format_number(zero_x) << "\" y2=\"" << height - 16 << "\" stroke=\"#333\"/>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace captune::evalkit
