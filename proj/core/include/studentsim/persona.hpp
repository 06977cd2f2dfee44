#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace studentsim {

/// Binary learning characteristics, in canonical order.
enum class Trait : std::size_t {
  kAttitude = 0,
  kExamPerformance,
  kFocus,
  kCuriosity,
  kInterest,
  kPriorKnowledge,
  kCompliance,
  kSmartness,
  kFamily,
};

inline constexpr std::size_t kTraitCount = 9;
inline constexpr std::array<std::string_view, kTraitCount> kTraitNames{
    "attitude", "exam_performance", "focus",      "curiosity", "interest",
    "prior_knowledge", "compliance", "smartness", "family"};

inline constexpr int kAgeCategories = 4;
inline constexpr int kGenderCategories = 3;
inline constexpr int kMajorCategories = 6;
inline constexpr int kEducationCategories = 4;

/// Demographics plus nine binary characteristics.
struct PersonaProfile {
  int age = 0;        // 0..3
  int gender = 0;     // 0..2
  int major = 0;      // 0..5
  int education = 0;  // 0..3
  std::array<std::uint8_t, kTraitCount> traits{};

  [[nodiscard]] bool trait(Trait t) const { return traits[static_cast<std::size_t>(t)] != 0; }
  void set_trait(Trait t, bool on) { traits[static_cast<std::size_t>(t)] = on ? 1 : 0; }
  [[nodiscard]] bool valid() const;

  friend bool operator==(const PersonaProfile&, const PersonaProfile&) = default;
};

/// Number of encoded items: four demographics followed by the nine traits.
inline constexpr std::size_t kPersonaItems = 4 + kTraitCount;
/// Item names in encoding order.
inline constexpr std::array<std::string_view, kPersonaItems> kPersonaItemNames{
    "age",       "gender",   "major",           "education",  "attitude",  "exam_performance", "focus",
    "curiosity", "interest", "prior_knowledge", "compliance", "smartness", "family"};

struct PersonaEncoding {
  std::array<double, kPersonaItems> items{};
  double aggregate = 0.0;
};

/// Size of the full persona space: 4*3*6*4*2^9.
[[nodiscard]] constexpr std::int64_t persona_space_size() {
  return std::int64_t{kAgeCategories} * kGenderCategories * kMajorCategories * kEducationCategories *
         (std::int64_t{1} << kTraitCount);
}

/// Bijection between [0, persona_space_size()) and the persona space.
/// Traits occupy the low bits, demographics the high mixed-radix digits.
[[nodiscard]] PersonaProfile persona_from_index(std::int64_t index);
[[nodiscard]] std::int64_t persona_index(const PersonaProfile& p);

/// Uniform draw over the persona space; a pure function of `seed`.
[[nodiscard]] PersonaProfile sample_persona(std::uint64_t seed);

/// Categoricals scale as index/max_index, traits pass through, aggregate is the item mean.
[[nodiscard]] PersonaEncoding encode_persona(const PersonaProfile& p);

/// Thirteen "Label: value" lines, one per demographic and characteristic.
[[nodiscard]] std::string render_persona_text(const PersonaProfile& p);

[[nodiscard]] std::string_view age_label(int age);
[[nodiscard]] std::string_view gender_label(int gender);
[[nodiscard]] std::string_view major_label(int major);
[[nodiscard]] std::string_view education_label(int education);
[[nodiscard]] std::string_view trait_phrase(Trait t, bool positive);

}  // namespace studentsim
