// Copyright 2026 The histest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON persistence for histograms and discrete distributions.
//
// Histogram file:
//   { "dim": d, "domain": "unit_cube" | {"grid": m},
//     "pieces": [ {"lo": [...], "hi": [...], "density": f}, ... ] }
// Discrete distribution file:
//   { "probs": [...] }

#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "histest/histogram.hpp"

namespace histest {

inline nlohmann::json to_json(const Histogram& h) {
  nlohmann::json pieces = nlohmann::json::array();
  for (const Piece& p : h.pieces()) {
    pieces.push_back({{"lo", std::vector<double>(p.rect.lo.coords().begin(),
                                                 p.rect.lo.coords().end())},
                      {"hi", std::vector<double>(p.rect.hi.coords().begin(),
                                                 p.rect.hi.coords().end())},
                      {"density", p.density}});
  }
  nlohmann::json domain = "unit_cube";
  if (h.domain().is_grid()) domain = {{"grid", h.domain().grid_side}};
  return {{"dim", h.dim()}, {"domain", domain}, {"pieces", pieces}};
}

// Parses and validates; malformed or invalid input throws.
inline Histogram histogram_from_json(const nlohmann::json& j) {
  const auto dim = j.at("dim").get<std::size_t>();
  Domain domain = Domain::unit_cube();
  if (j.contains("domain")) {
    const auto& d = j.at("domain");
    if (d.is_string()) {
      if (d.get<std::string>() != "unit_cube") {
        throw std::invalid_argument("unknown domain '" + d.get<std::string>() + "'");
      }
    } else {
      domain = Domain::grid(d.at("grid").get<std::size_t>());
    }
  }
  std::vector<Piece> pieces;
  for (const auto& jp : j.at("pieces")) {
    const auto lo = jp.at("lo").get<std::vector<double>>();
    const auto hi = jp.at("hi").get<std::vector<double>>();
    if (lo.size() != dim || hi.size() != dim) {
      throw ValidationError(Violation::kDimension, "piece corner has wrong length");
    }
    pieces.push_back({Rect{Point(std::span<const double>(lo)),
                           Point(std::span<const double>(hi))},
                      jp.at("density").get<double>()});
  }
  return Histogram(dim, std::move(pieces), domain);
}

inline nlohmann::json to_json(const DiscreteDist& p) {
  return {{"probs", std::vector<double>(p.probs().begin(), p.probs().end())}};
}

inline DiscreteDist discrete_from_json(const nlohmann::json& j) {
  return DiscreteDist(j.at("probs").get<std::vector<double>>());
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

inline Histogram read_histogram(const std::string& path) {
  return histogram_from_json(read_json_file(path));
}

inline void write_histogram(const std::string& path, const Histogram& h) {
  write_json_file(path, to_json(h));
}

}  // namespace histest
