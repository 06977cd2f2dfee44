#pragma once

#include <nlohmann/json.hpp>

#include "studentsim/core_model.hpp"
#include "studentsim/persona.hpp"

namespace studentsim {

/// Schema version written into every JSONL line this library produces.
inline constexpr int kFormatVersion = 1;

// Field names follow the domain types one-to-one. Absent AOIs serialize as
// null. Readers throw nlohmann::json exceptions or ValidationError; the
// loaders in dataset.hpp attach line numbers.

void to_json(nlohmann::json& j, const BBox& b);
void from_json(const nlohmann::json& j, BBox& b);
void to_json(nlohmann::json& j, const Aoi& a);
void from_json(const nlohmann::json& j, Aoi& a);
void to_json(nlohmann::json& j, const Transcript& t);
void from_json(const nlohmann::json& j, Transcript& t);
void to_json(nlohmann::json& j, const Question& q);
void from_json(const nlohmann::json& j, Question& q);
void to_json(nlohmann::json& j, const Slide& s);
void from_json(const nlohmann::json& j, Slide& s);
void to_json(nlohmann::json& j, const CognitiveStateVector& c);
void from_json(const nlohmann::json& j, CognitiveStateVector& c);
void to_json(nlohmann::json& j, const BehaviorRecord& r);
void from_json(const nlohmann::json& j, BehaviorRecord& r);
void to_json(nlohmann::json& j, const AnswerRecord& a);
void from_json(const nlohmann::json& j, AnswerRecord& a);
void to_json(nlohmann::json& j, const PersonaProfile& p);
void from_json(const nlohmann::json& j, PersonaProfile& p);

[[nodiscard]] nlohmann::json aoi_to_json(const MaybeAoi& a);
[[nodiscard]] MaybeAoi aoi_from_json(const nlohmann::json& j);

/// Rejects a line whose `version` is missing or unsupported.
void check_version(const nlohmann::json& j);

}  // namespace studentsim
