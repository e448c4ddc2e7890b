#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ttcpd {

/// Systematic factor trajectory f_1..f_T in probit units.
struct FactorPath {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double mean() const;
};

/// |I| x T observation pattern; true where a default rate is available.
class AvailabilityMask {
  public:
    AvailabilityMask() = default;
    /// Throws DomainError on ragged rows or an all-false grid.
    explicit AvailabilityMask(std::vector<std::vector<bool>> grid);

    static AvailabilityMask full(std::size_t portfolios, std::size_t years);

    std::size_t portfolios() const { return grid_.size(); }
    std::size_t years() const { return grid_.empty() ? 0 : grid_.front().size(); }
    bool observed(std::size_t i, std::size_t t) const { return grid_[i][t]; }
    std::size_t observed_count() const;
    const std::vector<std::vector<bool>>& grid() const { return grid_; }

  private:
    std::vector<std::vector<bool>> grid_;
};

/// Record of a degenerate default rate (0 or 1) that was moved into (0,1).
struct ClampWarning {
    std::string portfolio_id;
    int year;
    double original;
    double clamped;

    std::string message() const;
};

/// Rectangular panel of annual default rates d_{i,t} with explicit missing
/// cells. Rates are stored as observed, in [0,1]; degenerate values are moved
/// into the open interval by clamped_rate() at transform time.
class DefaultRatePanel {
  public:
    DefaultRatePanel() = default;

    /// Creates an all-missing panel. Years must be strictly increasing,
    /// portfolio ids unique and both non-empty.
    DefaultRatePanel(std::vector<std::string> portfolio_ids, std::vector<int> years);

    /// Sets a rate in [0,1]. A positive obligor count may be attached; once
    /// any cell carries a count every observed cell must carry one.
    void set(std::size_t i, std::size_t t, double rate, std::optional<std::int64_t> obligors = {});
    void erase(std::size_t i, std::size_t t);

    std::size_t portfolios() const { return ids_.size(); }
    std::size_t years() const { return years_.size(); }
    const std::vector<std::string>& portfolio_ids() const { return ids_; }
    const std::vector<int>& year_labels() const { return years_; }

    bool observed(std::size_t i, std::size_t t) const { return cells_[index(i, t)].has_value(); }
    double rate(std::size_t i, std::size_t t) const;
    std::optional<std::int64_t> obligors(std::size_t i, std::size_t t) const { return counts_[index(i, t)]; }
    bool has_obligor_counts() const;

    /// Rate moved into (0,1): degenerate values become 1/(2n) or 1 - 1/(2n)
    /// when an obligor count n is known, else clamp_eps or 1 - clamp_eps.
    /// Appends a warning when the value changed.
    double clamped_rate(std::size_t i, std::size_t t, double clamp_eps,
                        std::vector<ClampWarning>* warnings = nullptr) const;

    std::size_t observed_count() const;
    std::size_t observed_count(std::size_t i) const;
    AvailabilityMask mask() const;

    /// Deletes every cell not marked observed in the mask.
    void apply_mask(const AvailabilityMask& mask);

    std::optional<std::size_t> portfolio_index(const std::string& id) const;

    /// Checks that obligor counts, when present, cover every observed cell.
    void validate() const;

  private:
    std::size_t index(std::size_t i, std::size_t t) const { return i * years_.size() + t; }

    std::vector<std::string> ids_;
    std::vector<int> years_;
    std::vector<std::optional<double>> cells_;
    std::vector<std::optional<std::int64_t>> counts_;
};

}  // namespace ttcpd
