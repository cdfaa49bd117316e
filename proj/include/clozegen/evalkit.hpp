#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cloze::eval {

enum class Verdict { Appropriate, Inappropriate };
enum class TargetKind { Stem, Distractor };

std::string_view to_string(Verdict v);
std::string_view to_string(TargetKind k);
/// "appropriate" / "inappropriate" (case-insensitive). Throws InvalidArgument.
Verdict parse_verdict(std::string_view s);
/// "stem" / "distractor". Throws InvalidArgument.
TargetKind parse_target_kind(std::string_view s);

struct ReviewRecord {
    std::string target_id;
    TargetKind target_kind = TargetKind::Stem;
    std::string reviewer_id;
    Verdict verdict = Verdict::Appropriate;
    std::string comment;

    /// Throws InvalidArgument: empty ids, or inappropriate without a comment.
    void validate() const;
    bool operator==(const ReviewRecord&) const = default;
};

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const;  // "45/60", unreduced
    bool operator==(const Rational&) const = default;
};

/// Matching positions over n; the p_o used inside cohen_kappa.
/// Throws LengthMismatch / EmptyInput.
Rational observed_agreement(const std::vector<Verdict>& a, const std::vector<Verdict>& b);

double percent_agreement(const std::vector<Verdict>& a, const std::vector<Verdict>& b);

struct KappaResult {
    double kappa = 0.0;
    bool degenerate = false;  // p_e = 1: both raters constant and equal; kappa reported as 1
};

/// Cohen's kappa from integer counts: (n*m - S) / (n^2 - S) with
/// S = ca*cb + (n-ca)*(n-cb), ca/cb the "appropriate" counts.
KappaResult cohen_kappa_detail(const std::vector<Verdict>& a, const std::vector<Verdict>& b);
double cohen_kappa(const std::vector<Verdict>& a, const std::vector<Verdict>& b);

/// final[i] = a[i] where the raters agree, third[i] elsewhere.
/// Throws MissingTieBreak naming the first unresolved index.
std::vector<Verdict> resolve(const std::vector<Verdict>& a, const std::vector<Verdict>& b,
                             const std::vector<std::optional<Verdict>>& third);

/// Appropriate count over `universe`. Throws InvalidArgument when
/// universe is 0 or smaller than the verdict count.
Rational wellformedness(const std::vector<Verdict>& final_verdicts, std::size_t universe);

// ------------------------------------------------------------ annotation

struct AnnotationLabel {
    std::string target_id;
    std::string category;
    std::string subcategory;
};

/// Category -> subcategory lists. The five categories are fixed; a
/// vocabulary file ("category,subcategory" CSV) can add subcategories.
class Vocabulary {
public:
    static const std::vector<std::string>& categories();
    /// Seeded with the stem and distractor error taxonomies.
    static Vocabulary builtin();

    /// Adds the rows of a category,subcategory CSV. Throws UnknownCategory.
    void extend_csv(std::string_view text);

    bool contains(std::string_view category, std::string_view subcategory) const;
    const std::vector<std::string>& subcategories(std::string_view category) const;

private:
    std::vector<std::vector<std::string>> subs_;  // parallel to categories()
};

struct TallyRow {
    std::string category;
    std::string subcategory;
    int count = 0;
};

struct Tally {
    std::vector<TallyRow> rows;  // vocabulary order, non-zero only
    int total_labels = 0;
    int distinct_targets = 0;

    int count(std::string_view category, std::string_view subcategory) const;
    nlohmann::ordered_json to_json() const;
    std::string to_text() const;
};

/// One count per label; a target carrying two labels counts twice.
/// Throws UnknownCategory.
Tally tally(const std::vector<AnnotationLabel>& labels, const Vocabulary& vocabulary = Vocabulary::builtin());

inline constexpr std::string_view kLabelsHeader = "target_id,category,subcategory";
std::vector<AnnotationLabel> parse_labels_csv(std::string_view text);

// ------------------------------------------------------------ ratings

inline constexpr std::string_view kRatingsHeader = "target_id,target_kind,reviewer_id,verdict,comment";

/// Throws MalformedCsv for structural problems, InvalidArgument for
/// invalid records (with the line number).
std::vector<ReviewRecord> parse_ratings_csv(std::string_view text);
std::string format_ratings_csv(const std::vector<ReviewRecord>& records);

struct KindReport {
    TargetKind kind = TargetKind::Stem;
    Rational agreement;  // over targets rated by both primary raters
    KappaResult kappa;
    int disagreements = 0;
    int unresolved = 0;                   // disagreements without a tie-break verdict
    std::optional<Rational> wellformed;   // after resolution; empty while unresolved > 0
};

struct AgreementReport {
    std::string rater_a;
    std::string rater_b;
    std::optional<std::string> tie_breaker;
    std::vector<KindReport> kinds;  // stem, then distractor; kinds without overlap omitted

    nlohmann::ordered_json to_json() const;
    std::string to_text() const;
};

/// The first two reviewer ids in record order are the primary raters, the
/// third (if any) breaks ties. For duplicate (reviewer, target) records
/// the last one counts. Throws InsufficientOverlap when fewer than two
/// reviewers exist or they share no target.
AgreementReport agreement_report(const std::vector<ReviewRecord>& records);

/// agreement_report(records).to_json().dump(2) + "\n"; the single
/// serialization shared by the service and the command line.
std::string report_json(const std::vector<ReviewRecord>& records);

}  // namespace cloze::eval
