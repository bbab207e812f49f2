// Copyright 2026 The Dilemma Harness Authors. All rights reserved.
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

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dilemma/game/types.hpp"
#include "dilemma/template_assets.hpp"

namespace dilemma {

class RenderError : public std::runtime_error {
 public:
  RenderError(std::string placeholder, const std::string& what)
      : std::runtime_error(what), placeholder_(std::move(placeholder)) {}
  const std::string& placeholder() const noexcept { return placeholder_; }

 private:
  std::string placeholder_;
};

// A prompt body with `${name}` placeholders. The text between the braces is the
// key verbatim, so `${avg_payoff:.1f}` is filled by the key "avg_payoff:.1f".
class PromptTemplate {
 public:
  PromptTemplate(std::string id, std::string body) : id_(std::move(id)), body_(std::move(body)) {
    std::size_t pos = 0;
    while ((pos = body_.find("${", pos)) != std::string::npos) {
      const std::size_t close = body_.find('}', pos + 2);
      if (close == std::string::npos) break;
      required_.insert(body_.substr(pos + 2, close - pos - 2));
      pos = close + 1;
    }
  }

  static PromptTemplate builtin(std::string_view id) {
    for (const auto& asset : assets::kTemplates) {
      if (asset.id == id) return PromptTemplate(std::string(asset.id), std::string(asset.body));
    }
    throw RenderError("", "no built-in template '" + std::string(id) + "'");
  }

  const std::string& id() const { return id_; }
  const std::string& body() const { return body_; }
  const std::set<std::string>& required_placeholders() const { return required_; }

  // Single pass: substituted values are never re-scanned for placeholders.
  std::string fill(const std::map<std::string, std::string>& values) const {
    for (const auto& name : required_) {
      if (values.find(name) == values.end()) {
        throw RenderError(name, "template '" + id_ + "' is missing placeholder '" + name + "'");
      }
    }
    std::string out;
    out.reserve(body_.size() + 256);
    std::size_t pos = 0;
    while (true) {
      const std::size_t open = body_.find("${", pos);
      const std::size_t close = open == std::string::npos ? open : body_.find('}', open + 2);
      if (open == std::string::npos || close == std::string::npos) {
        out.append(body_, pos, std::string::npos);
        return out;
      }
      out.append(body_, pos, open - pos);
      out.append(values.at(body_.substr(open + 2, close - open - 2)));
      pos = close + 1;
    }
  }

 private:
  std::string id_;
  std::string body_;
  std::set<std::string> required_;
};

inline std::string_view template_id_for(GameKind kind, Phase phase) {
  switch (kind) {
    case GameKind::kStagHunt: return "stag_hunt";
    case GameKind::kStagHuntComm:
      return phase == Phase::kCommunicate ? "stag_hunt_comm_communicate" : "stag_hunt_comm_action";
    case GameKind::kIPD2: return "ipd2";
    case GameKind::kNIPD: return "nipd";
    case GameKind::kPGG: return "pgg";
    case GameKind::kIPGGPunish: return "pgg_punish";
  }
  return "";
}

inline PromptTemplate template_for(GameKind kind, Phase phase) {
  return PromptTemplate::builtin(template_id_for(kind, phase));
}

}  // namespace dilemma
