#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ttcpd {

/// Raised when an argument lies outside the domain of a formula
/// (probabilities outside (0,1), correlations outside [0,1), ...).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// A sub-portfolio without a single observed default rate.
class EmptyPortfolio : public std::runtime_error {
  public:
    EmptyPortfolio(const std::string& portfolio)
        : std::runtime_error("portfolio '" + portfolio + "' has no observed default rates"),
          portfolio_(portfolio) {}
    const std::string& portfolio() const { return portfolio_; }

  private:
    std::string portfolio_;
};

/// The constrained design matrix is rank deficient, i.e. the missing-data
/// pattern does not pin down (K, f) uniquely.
class SingularSystem : public std::runtime_error {
  public:
    SingularSystem(const std::string& what, int deficiency, std::vector<std::string> groups)
        : std::runtime_error(what), deficiency_(deficiency), groups_(std::move(groups)) {}
    int deficiency() const { return deficiency_; }
    /// Human readable descriptions of the disconnected portfolio/year groups.
    const std::vector<std::string>& groups() const { return groups_; }

  private:
    int deficiency_;
    std::vector<std::string> groups_;
};

/// Malformed input file or flag value.
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace ttcpd
