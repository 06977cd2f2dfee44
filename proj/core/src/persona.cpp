#include "studentsim/persona.hpp"

#include <numeric>
#include <random>
#include <stdexcept>

namespace studentsim {
namespace {

constexpr std::array<std::string_view, kAgeCategories> kAges{"18-24", "25-31", "32-38", "> 39"};
constexpr std::array<std::string_view, kGenderCategories> kGenders{"female", "male", "others"};
constexpr std::array<std::string_view, kMajorCategories> kMajors{"Humanities", "Social",   "Natural",
                                                                 "Technology", "Business", "Health"};
constexpr std::array<std::string_view, kEducationCategories> kEducations{"high school", "undergraduate", "master",
                                                                         "doctor"};

struct TraitText {
  std::string_view label;
  std::string_view positive;
  std::string_view negative;
};

constexpr std::array<TraitText, kTraitCount> kTraitTexts{{
    {"Learning attitude", "Very motivated", "Not motivated"},
    {"Exam performance", "High GPA, answer test questions correctly", "Low GPA. make mistakes in post-test"},
    {"Focus", "Very focus", "Usually absent-minded"},
    {"Curiosity", "Curious to explore everything in the course", "Not curious at all"},
    {"Interest in course", "Super interested", "Not Interested at all"},
    {"Prior knowledge", "Strong background with prior knowledge", "No background without priors"},
    {"Compliance", "Well-behaved to follow teachers", "Unwilling to follow teachers"},
    {"Smartness", "Smart to understand everything fast", "Not smart, understand things slowly"},
    {"Family", "Parents have a strong academic background", "Parents do not care about education"},
}};

template <std::size_t N>
std::string_view label_at(const std::array<std::string_view, N>& table, int i, const char* what) {
  if (i < 0 || static_cast<std::size_t>(i) >= N) throw std::out_of_range(std::string(what) + " category out of range");
  return table[static_cast<std::size_t>(i)];
}

}  // namespace

bool PersonaProfile::valid() const {
  if (age < 0 || age >= kAgeCategories) return false;
  if (gender < 0 || gender >= kGenderCategories) return false;
  if (major < 0 || major >= kMajorCategories) return false;
  if (education < 0 || education >= kEducationCategories) return false;
  for (auto t : traits) {
    if (t > 1) return false;
  }
  return true;
}

PersonaProfile persona_from_index(std::int64_t index) {
  if (index < 0 || index >= persona_space_size()) throw std::out_of_range("persona index out of range");
  PersonaProfile p;
  for (std::size_t i = 0; i < kTraitCount; ++i) p.traits[i] = static_cast<std::uint8_t>((index >> i) & 1);
  auto rest = index >> kTraitCount;
  p.education = static_cast<int>(rest % kEducationCategories);
  rest /= kEducationCategories;
  p.major = static_cast<int>(rest % kMajorCategories);
  rest /= kMajorCategories;
  p.gender = static_cast<int>(rest % kGenderCategories);
  rest /= kGenderCategories;
  p.age = static_cast<int>(rest);
  return p;
}

std::int64_t persona_index(const PersonaProfile& p) {
  std::int64_t demo = ((std::int64_t{p.age} * kGenderCategories + p.gender) * kMajorCategories + p.major) *
                          kEducationCategories +
                      p.education;
  std::int64_t bits = 0;
  for (std::size_t i = 0; i < kTraitCount; ++i) bits |= std::int64_t{p.traits[i] != 0} << i;
  return (demo << kTraitCount) | bits;
}

PersonaProfile sample_persona(std::uint64_t seed) {
  // Modulo bias over 2^64 is below 1e-14 for this space size; the mapping is
  // spelled out so draws are identical across standard libraries.
  std::mt19937_64 rng(seed);
  const auto draw = rng() % static_cast<std::uint64_t>(persona_space_size());
  return persona_from_index(static_cast<std::int64_t>(draw));
}

PersonaEncoding encode_persona(const PersonaProfile& p) {
  PersonaEncoding e;
  e.items[0] = static_cast<double>(p.age) / (kAgeCategories - 1);
  e.items[1] = static_cast<double>(p.gender) / (kGenderCategories - 1);
  e.items[2] = static_cast<double>(p.major) / (kMajorCategories - 1);
  e.items[3] = static_cast<double>(p.education) / (kEducationCategories - 1);
  for (std::size_t i = 0; i < kTraitCount; ++i) e.items[4 + i] = p.traits[i] != 0 ? 1.0 : 0.0;
  e.aggregate = std::accumulate(e.items.begin(), e.items.end(), 0.0) / static_cast<double>(kPersonaItems);
  return e;
}

std::string_view age_label(int age) { return label_at(kAges, age, "age"); }
std::string_view gender_label(int gender) { return label_at(kGenders, gender, "gender"); }
std::string_view major_label(int major) { return label_at(kMajors, major, "major"); }
std::string_view education_label(int education) { return label_at(kEducations, education, "education"); }

std::string_view trait_phrase(Trait t, bool positive) {
  const auto& tt = kTraitTexts[static_cast<std::size_t>(t)];
  return positive ? tt.positive : tt.negative;
}

std::string render_persona_text(const PersonaProfile& p) {
  std::string out;
  auto line = [&out](std::string_view label, std::string_view value) {
    out.append(label).append(": ").append(value).push_back('\n');
  };
  line("Age", age_label(p.age));
  line("Gender", gender_label(p.gender));
  line("Major", major_label(p.major));
  line("Education level", education_label(p.education));
  for (std::size_t i = 0; i < kTraitCount; ++i) {
    line(kTraitTexts[i].label, trait_phrase(static_cast<Trait>(i), p.traits[i] != 0));
  }
  return out;
}

}  // namespace studentsim
