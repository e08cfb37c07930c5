#pragma once
// Canonical data model: raters, items, assessments and stratification frames.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crowdmrp {

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Gender : std::uint8_t { male, female };
enum class Party : std::uint8_t { democrat, republican, neutral };

inline constexpr int kCategories = 4;  // 1 = "Not accurate at all" .. 4 = "Very accurate"
inline constexpr int kAttentionChecks = 3;

std::string_view to_string(Gender g);
std::string_view to_string(Party p);
Gender parse_gender(std::string_view s);
Party parse_party(std::string_view s);

// 50 states plus DC, alphabetical by code.
const std::array<std::string_view, 51>& state_codes();
bool is_state_code(std::string_view code);

std::vector<std::string> default_age_bands();

struct Rater {
    std::string id;
    Gender gender = Gender::male;
    std::string age_band;
    std::string state;
    Party party = Party::neutral;
    std::optional<double> party_score;  // elite-follower score in [-1, 1], if any
    std::optional<std::string> zip;
    int attention_failures = 0;
};

struct Item {
    std::string id;
    std::vector<std::string> annotations;
    std::string text;
};

struct Assessment {
    std::string rater_id;
    std::string item_id;
    int rating = 0;
};

struct PersonaCell {
    Gender gender = Gender::male;
    std::string age_band;
    std::string state;
    Party party = Party::neutral;
    double weight = 0.0;
};

struct StratificationFrame {
    std::vector<PersonaCell> cells;
    std::string label;

    double total_weight() const;
    // Cells with party == j (the partisan sub-frame).
    StratificationFrame partisan(Party j) const;
    // Throws ValidationError on negative weights, duplicate keys or zero total.
    void validate() const;
};

}  // namespace crowdmrp
