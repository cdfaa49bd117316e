#include "clozegen/evalkit.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "clozegen/csv.hpp"
#include "clozegen/error.hpp"
#include "clozegen/text.hpp"

namespace cloze::eval {

std::string_view to_string(Verdict v)
{
    return v == Verdict::Appropriate ? "appropriate" : "inappropriate";
}

std::string_view to_string(TargetKind k)
{
    return k == TargetKind::Stem ? "stem" : "distractor";
}

Verdict parse_verdict(std::string_view s)
{
    const auto t = text::to_lower(text::trim(s));
    if (t == "appropriate")
        return Verdict::Appropriate;
    if (t == "inappropriate")
        return Verdict::Inappropriate;
    throw Error(Errc::InvalidArgument, "unknown verdict '" + std::string(s) + "'");
}

TargetKind parse_target_kind(std::string_view s)
{
    const auto t = text::to_lower(text::trim(s));
    if (t == "stem")
        return TargetKind::Stem;
    if (t == "distractor")
        return TargetKind::Distractor;
    throw Error(Errc::InvalidArgument, "unknown target kind '" + std::string(s) + "'");
}

void ReviewRecord::validate() const
{
    if (text::trim(target_id).empty())
        throw Error(Errc::InvalidArgument, "target_id is empty");
    if (text::trim(reviewer_id).empty())
        throw Error(Errc::InvalidArgument, "reviewer_id is empty");
    if (verdict == Verdict::Inappropriate && text::trim(comment).empty())
        throw Error(Errc::InvalidArgument, "an inappropriate verdict needs a comment (" + target_id + ")");
}

std::string Rational::str() const
{
    return std::to_string(num) + "/" + std::to_string(den);
}

namespace {

void check_pair(const std::vector<Verdict>& a, const std::vector<Verdict>& b)
{
    if (a.size() != b.size())
        throw Error(Errc::LengthMismatch,
                    "rating sequences differ in length (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    if (a.empty())
        throw Error(Errc::EmptyInput, "rating sequences are empty");
}

}  // namespace

Rational observed_agreement(const std::vector<Verdict>& a, const std::vector<Verdict>& b)
{
    check_pair(a, b);
    std::int64_t m = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m += a[i] == b[i];
    return {m, static_cast<std::int64_t>(a.size())};
}

double percent_agreement(const std::vector<Verdict>& a, const std::vector<Verdict>& b)
{
    return observed_agreement(a, b).value();
}

KappaResult cohen_kappa_detail(const std::vector<Verdict>& a, const std::vector<Verdict>& b)
{
    const Rational po = observed_agreement(a, b);
    const std::int64_t n = po.den;
    const std::int64_t m = po.num;
    const auto ca = static_cast<std::int64_t>(std::count(a.begin(), a.end(), Verdict::Appropriate));
    const auto cb = static_cast<std::int64_t>(std::count(b.begin(), b.end(), Verdict::Appropriate));
    const std::int64_t s = ca * cb + (n - ca) * (n - cb);
    const std::int64_t denom = n * n - s;
    if (denom == 0)
        return {1.0, true};
    return {static_cast<double>(n * m - s) / static_cast<double>(denom), false};
}

double cohen_kappa(const std::vector<Verdict>& a, const std::vector<Verdict>& b)
{
    return cohen_kappa_detail(a, b).kappa;
}

std::vector<Verdict> resolve(const std::vector<Verdict>& a, const std::vector<Verdict>& b,
                             const std::vector<std::optional<Verdict>>& third)
{
    if (a.size() != b.size())
        throw Error(Errc::LengthMismatch, "rating sequences differ in length");
    std::vector<Verdict> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) {
            out[i] = a[i];
        } else if (i < third.size() && third[i]) {
            out[i] = *third[i];
        } else {
            throw Error(Errc::MissingTieBreak, "no tie-break verdict at index " + std::to_string(i));
        }
    }
    return out;
}

Rational wellformedness(const std::vector<Verdict>& final_verdicts, std::size_t universe)
{
    if (universe == 0 || universe < final_verdicts.size())
        throw Error(Errc::InvalidArgument, "universe must be positive and cover every verdict");
    const auto ok = std::count(final_verdicts.begin(), final_verdicts.end(), Verdict::Appropriate);
    return {static_cast<std::int64_t>(ok), static_cast<std::int64_t>(universe)};
}

// ------------------------------------------------------------ annotation

const std::vector<std::string>& Vocabulary::categories()
{
    static const std::vector<std::string> cats = {"Mechanical", "Syntax", "Semantics", "Key fitness", "Others"};
    return cats;
}

Vocabulary Vocabulary::builtin()
{
    Vocabulary v;
    v.subs_ = {
        {"Capitalization"},
        {"Determiner", "Noun number", "Clause conjunction", "POS", "Verb transitivity", "Article match",
         "Inflection"},
        {"Perplexity", "Acceptable answers"},
        {"Rare use/collocation", "Syntactic unfitness"},
        {"Similar distractors"},
    };
    return v;
}

namespace {

std::optional<std::size_t> category_index(std::string_view category)
{
    const auto& cats = Vocabulary::categories();
    for (std::size_t i = 0; i < cats.size(); ++i)
        if (cats[i] == category)
            return i;
    return std::nullopt;
}

bool blank_row(const csv::Row& row)
{
    return row.size() == 1 && text::trim(row[0]).empty();
}

}  // namespace

void Vocabulary::extend_csv(std::string_view text_in)
{
    const auto rows = csv::parse(text_in);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (blank_row(row) || (r == 0 && row.size() == 2 && row[0] == "category" && row[1] == "subcategory"))
            continue;
        if (row.size() != 2)
            throw Error(Errc::MalformedCsv, "vocabulary line " + std::to_string(r + 1) + ": expected 2 fields");
        const auto cat = text::trim(row[0]);
        const auto sub = text::trim(row[1]);
        auto idx = category_index(cat);
        if (!idx)
            throw Error(Errc::UnknownCategory, "'" + cat + "' is not one of the five categories");
        if (sub.empty())
            throw Error(Errc::MalformedCsv, "vocabulary line " + std::to_string(r + 1) + ": empty subcategory");
        auto& list = subs_[*idx];
        if (std::find(list.begin(), list.end(), sub) == list.end())
            list.push_back(sub);
    }
}

bool Vocabulary::contains(std::string_view category, std::string_view subcategory) const
{
    auto idx = category_index(category);
    if (!idx)
        return false;
    const auto& list = subs_[*idx];
    return std::find(list.begin(), list.end(), subcategory) != list.end();
}

const std::vector<std::string>& Vocabulary::subcategories(std::string_view category) const
{
    auto idx = category_index(category);
    if (!idx)
        throw Error(Errc::UnknownCategory, std::string(category));
    return subs_[*idx];
}

int Tally::count(std::string_view category, std::string_view subcategory) const
{
    for (const auto& r : rows)
        if (r.category == category && r.subcategory == subcategory)
            return r.count;
    return 0;
}

nlohmann::ordered_json Tally::to_json() const
{
    nlohmann::ordered_json j;
    j["total_labels"] = total_labels;
    j["distinct_targets"] = distinct_targets;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        j["rows"].push_back({{"category", r.category}, {"subcategory", r.subcategory}, {"count", r.count}});
    return j;
}

std::string Tally::to_text() const
{
    std::string out;
    std::string last;
    for (const auto& r : rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-12s %-24s %4d\n", r.category == last ? "" : r.category.c_str(),
                      r.subcategory.c_str(), r.count);
        out += buf;
        last = r.category;
    }
    out += "total " + std::to_string(total_labels) + " labels over " + std::to_string(distinct_targets) +
           " targets\n";
    return out;
}

Tally tally(const std::vector<AnnotationLabel>& labels, const Vocabulary& vocabulary)
{
    std::map<std::pair<std::string, std::string>, int> counts;
    std::set<std::string> targets;
    for (const auto& l : labels) {
        if (!category_index(l.category))
            throw Error(Errc::UnknownCategory, "unknown category '" + l.category + "'");
        if (!vocabulary.contains(l.category, l.subcategory))
            throw Error(Errc::UnknownCategory,
                        "'" + l.subcategory + "' is not a subcategory of " + l.category);
        ++counts[{l.category, l.subcategory}];
        targets.insert(l.target_id);
    }

    Tally t;
    t.total_labels = static_cast<int>(labels.size());
    t.distinct_targets = static_cast<int>(targets.size());
    for (const auto& cat : Vocabulary::categories())
        for (const auto& sub : vocabulary.subcategories(cat))
            if (auto it = counts.find({cat, sub}); it != counts.end())
                t.rows.push_back({cat, sub, it->second});
    return t;
}

std::vector<AnnotationLabel> parse_labels_csv(std::string_view text_in)
{
    const auto rows = csv::parse(text_in);
    if (rows.empty() || text::join(rows.front(), ",") != kLabelsHeader)
        throw Error(Errc::MalformedCsv, "expected header " + std::string(kLabelsHeader));
    std::vector<AnnotationLabel> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (blank_row(rows[r]))
            continue;
        if (rows[r].size() != 3)
            throw Error(Errc::MalformedCsv, "labels line " + std::to_string(r + 1) + ": expected 3 fields");
        out.push_back({text::trim(rows[r][0]), text::trim(rows[r][1]), text::trim(rows[r][2])});
    }
    return out;
}

// ------------------------------------------------------------ ratings

std::vector<ReviewRecord> parse_ratings_csv(std::string_view text_in)
{
    const auto rows = csv::parse(text_in);
    if (rows.empty() || text::join(rows.front(), ",") != kRatingsHeader)
        throw Error(Errc::MalformedCsv, "expected header " + std::string(kRatingsHeader));
    std::vector<ReviewRecord> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (blank_row(row))
            continue;
        const std::string where = "ratings line " + std::to_string(r + 1) + ": ";
        if (row.size() != 5)
            throw Error(Errc::MalformedCsv, where + "expected 5 fields");
        try {
            ReviewRecord rec{row[0], parse_target_kind(row[1]), row[2], parse_verdict(row[3]), row[4]};
            rec.validate();
            out.push_back(std::move(rec));
        } catch (const Error& e) {
            throw Error(e.code(), where + e.what());
        }
    }
    return out;
}

std::string format_ratings_csv(const std::vector<ReviewRecord>& records)
{
    std::string out(kRatingsHeader);
    out += '\n';
    for (const auto& r : records)
        out += csv::format_row({r.target_id, std::string(to_string(r.target_kind)), r.reviewer_id,
                                std::string(to_string(r.verdict)), r.comment});
    return out;
}

nlohmann::ordered_json AgreementReport::to_json() const
{
    nlohmann::ordered_json j;
    j["rater_a"] = rater_a;
    j["rater_b"] = rater_b;
    j["tie_breaker"] = tie_breaker ? nlohmann::ordered_json(*tie_breaker) : nlohmann::ordered_json(nullptr);
    j["kinds"] = nlohmann::ordered_json::array();
    for (const auto& k : kinds) {
        nlohmann::ordered_json e;
        e["target_kind"] = to_string(k.kind);
        e["n"] = k.agreement.den;
        e["matching"] = k.agreement.num;
        e["percent_agreement"] = k.agreement.value();
        e["percent_agreement_exact"] = k.agreement.str();
        e["kappa"] = k.kappa.kappa;
        e["kappa_degenerate"] = k.kappa.degenerate;
        e["disagreements"] = k.disagreements;
        e["unresolved"] = k.unresolved;
        if (k.wellformed) {
            e["appropriate"] = k.wellformed->num;
            e["wellformedness"] = k.wellformed->value();
            e["wellformedness_exact"] = k.wellformed->str();
        } else {
            e["appropriate"] = nullptr;
            e["wellformedness"] = nullptr;
            e["wellformedness_exact"] = nullptr;
        }
        j["kinds"].push_back(std::move(e));
    }
    return j;
}

std::string AgreementReport::to_text() const
{
    std::string out = "raters: " + rater_a + ", " + rater_b;
    if (tie_breaker)
        out += " (tie-break: " + *tie_breaker + ")";
    out += '\n';
    for (const auto& k : kinds) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%-10s n=%lld  agreement=%.4f (%s)  kappa=%.4f%s  disagreements=%d",
                      std::string(to_string(k.kind)).c_str(), static_cast<long long>(k.agreement.den),
                      k.agreement.value(), k.agreement.str().c_str(), k.kappa.kappa,
                      k.kappa.degenerate ? " [p_e=1]" : "", k.disagreements);
        out += buf;
        if (k.wellformed) {
            std::snprintf(buf, sizeof buf, "  well-formed=%.4f (%s)", k.wellformed->value(),
                          k.wellformed->str().c_str());
            out += buf;
        } else {
            out += "  unresolved=" + std::to_string(k.unresolved);
        }
        out += '\n';
    }
    return out;
}

AgreementReport agreement_report(const std::vector<ReviewRecord>& records)
{
    std::vector<std::string> reviewers;
    // (reviewer, target) -> record, last write wins; targets in first-seen order.
    std::map<std::pair<std::string, std::string>, const ReviewRecord*> latest;
    std::vector<std::pair<std::string, TargetKind>> targets;
    std::set<std::string> seen_targets;
    for (const auto& r : records) {
        if (std::find(reviewers.begin(), reviewers.end(), r.reviewer_id) == reviewers.end())
            reviewers.push_back(r.reviewer_id);
        latest[{r.reviewer_id, r.target_id}] = &r;
        if (seen_targets.insert(r.target_id).second)
            targets.emplace_back(r.target_id, r.target_kind);
    }
    if (reviewers.size() < 2)
        throw Error(Errc::InsufficientOverlap, "need verdicts from two reviewers");

    AgreementReport report;
    report.rater_a = reviewers[0];
    report.rater_b = reviewers[1];
    if (reviewers.size() > 2)
        report.tie_breaker = reviewers[2];

    auto lookup = [&](const std::string& reviewer, const std::string& target) -> const ReviewRecord* {
        auto it = latest.find({reviewer, target});
        return it == latest.end() ? nullptr : it->second;
    };

    for (TargetKind kind : {TargetKind::Stem, TargetKind::Distractor}) {
        std::vector<Verdict> a, b;
        std::vector<std::optional<Verdict>> third;
        for (const auto& [target, tkind] : targets) {
            if (tkind != kind)
                continue;
            const auto* ra = lookup(report.rater_a, target);
            const auto* rb = lookup(report.rater_b, target);
            if (!ra || !rb)
                continue;
            a.push_back(ra->verdict);
            b.push_back(rb->verdict);
            const auto* rc = report.tie_breaker ? lookup(*report.tie_breaker, target) : nullptr;
            third.push_back(rc ? std::optional<Verdict>(rc->verdict) : std::nullopt);
        }
        if (a.empty())
            continue;

        KindReport k;
        k.kind = kind;
        k.agreement = observed_agreement(a, b);
        k.kappa = cohen_kappa_detail(a, b);
        k.disagreements = static_cast<int>(k.agreement.den - k.agreement.num);
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i] != b[i] && !third[i])
                ++k.unresolved;
        if (k.unresolved == 0)
            k.wellformed = wellformedness(resolve(a, b, third), a.size());
        report.kinds.push_back(k);
    }
    if (report.kinds.empty())
        throw Error(Errc::InsufficientOverlap, report.rater_a + " and " + report.rater_b + " share no rated target");
    return report;
}

std::string report_json(const std::vector<ReviewRecord>& records)
{
    return agreement_report(records).to_json().dump(2) + "\n";
}

}  // namespace cloze::eval
