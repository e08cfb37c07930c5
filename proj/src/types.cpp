#include "crowdmrp/types.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace crowdmrp {

std::string_view to_string(Gender g) {
    return g == Gender::male ? "male" : "female";
}

std::string_view to_string(Party p) {
    switch (p) {
        case Party::democrat: return "democrat";
        case Party::republican: return "republican";
        case Party::neutral: return "neutral";
    }
    return "neutral";
}

Gender parse_gender(std::string_view s) {
    if (s == "male") return Gender::male;
    if (s == "female") return Gender::female;
    throw ValidationError("unknown gender '" + std::string(s) + "'");
}

Party parse_party(std::string_view s) {
    if (s == "democrat") return Party::democrat;
    if (s == "republican") return Party::republican;
    if (s == "neutral") return Party::neutral;
    throw ValidationError("unknown party '" + std::string(s) + "'");
}

const std::array<std::string_view, 51>& state_codes() {
    static constexpr std::array<std::string_view, 51> codes = {
        "AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DC", "DE", "FL", "GA",
        "HI", "IA", "ID", "IL", "IN", "KS", "KY", "LA", "MA", "MD", "ME",
        "MI", "MN", "MO", "MS", "MT", "NC", "ND", "NE", "NH", "NJ", "NM",
        "NV", "NY", "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX",
        "UT", "VA", "VT", "WA", "WI", "WV", "WY"};
    return codes;
}

bool is_state_code(std::string_view code) {
    const auto& codes = state_codes();
    return std::binary_search(codes.begin(), codes.end(), code);
}

std::vector<std::string> default_age_bands() {
    return {"-18", "19-29", "30-39", "40+"};
}

double StratificationFrame::total_weight() const {
    double total = 0.0;
    for (const auto& c : cells) total += c.weight;
    return total;
}

StratificationFrame StratificationFrame::partisan(Party j) const {
    StratificationFrame out;
    out.label = label + ":" + std::string(to_string(j));
    for (const auto& c : cells)
        if (c.party == j) out.cells.push_back(c);
    return out;
}

void StratificationFrame::validate() const {
    std::set<std::tuple<Gender, std::string, std::string, Party>> keys;
    for (const auto& c : cells) {
        if (!(c.weight >= 0.0))
            throw ValidationError("frame '" + label + "': negative cell weight");
        if (!keys.emplace(c.gender, c.age_band, c.state, c.party).second)
            throw ValidationError("frame '" + label + "': duplicate cell " +
                                  std::string(to_string(c.gender)) + "/" + c.age_band + "/" +
                                  c.state + "/" + std::string(to_string(c.party)));
    }
    if (!(total_weight() > 0.0))
        throw ValidationError("frame '" + label + "': total weight must be positive");
}

}  // namespace crowdmrp
