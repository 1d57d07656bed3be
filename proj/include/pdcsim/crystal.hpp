#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdcsim/errors.hpp"
#include "pdcsim/keyvalue.hpp"

namespace pdc {

// Supported Sellmeier shapes; wavelength l in um.
enum class SellmeierFormula {
  pole_pole,    // n^2 = A + B/(l^2 - C) + D l^2/(l^2 - E)
  pole_linear,  // n^2 = A + B/(l^2 - C) - D l^2
  cauchy,       // n   = A + B/l^2 + C/l^4 (trailing coefficients optional)
};

inline std::string_view to_string(SellmeierFormula f) noexcept {
  switch (f) {
    case SellmeierFormula::pole_pole: return "pole_pole";
    case SellmeierFormula::pole_linear: return "pole_linear";
    case SellmeierFormula::cauchy: return "cauchy";
  }
  return "?";
}

inline std::optional<SellmeierFormula> parse_formula(std::string_view s) noexcept {
  if (s == "pole_pole") return SellmeierFormula::pole_pole;
  if (s == "pole_linear") return SellmeierFormula::pole_linear;
  if (s == "cauchy") return SellmeierFormula::cauchy;
  return std::nullopt;
}

class SellmeierForm {
 public:
  SellmeierForm() = default;

  // Throws ConfigError when the coefficient count does not fit the formula or
  // the validity interval is empty.
  SellmeierForm(SellmeierFormula formula, std::vector<double> coefficients, double valid_um_min,
                double valid_um_max)
      : formula_(formula), coefficients_(std::move(coefficients)), min_um_(valid_um_min), max_um_(valid_um_max) {
    std::size_t lo = 0;
    std::size_t hi = 0;
    switch (formula_) {
      case SellmeierFormula::pole_pole: lo = hi = 5; break;
      case SellmeierFormula::pole_linear: lo = hi = 4; break;
      case SellmeierFormula::cauchy: lo = 1; hi = 3; break;
    }
    if (coefficients_.size() < lo || coefficients_.size() > hi) {
      throw ConfigError("formula " + std::string(to_string(formula_)) + " takes " + std::to_string(lo) +
                        (lo == hi ? "" : ".." + std::to_string(hi)) + " coefficients, got " +
                        std::to_string(coefficients_.size()));
    }
    if (!(valid_um_min > 0.0) || !(valid_um_max > valid_um_min)) {
      throw ConfigError("invalid validity range [" + std::to_string(valid_um_min) + ", " +
                        std::to_string(valid_um_max) + "] um");
    }
  }

  SellmeierFormula formula() const noexcept { return formula_; }
  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  double valid_um_min() const noexcept { return min_um_; }
  double valid_um_max() const noexcept { return max_um_; }

  bool covers(double wavelength_um) const noexcept { return wavelength_um >= min_um_ && wavelength_um <= max_um_; }

  /// Raw evaluation without the range check. Returns NaN where the form has no
  /// real index.
  double evaluate(double wavelength_um) const noexcept {
    const auto& c = coefficients_;
    const double l2 = wavelength_um * wavelength_um;
    switch (formula_) {
      case SellmeierFormula::pole_pole:
        return std::sqrt(c[0] + c[1] / (l2 - c[2]) + c[3] * l2 / (l2 - c[4]));
      case SellmeierFormula::pole_linear:
        return std::sqrt(c[0] + c[1] / (l2 - c[2]) - c[3] * l2);
      case SellmeierFormula::cauchy: {
        double n = c[0];
        if (c.size() > 1) n += c[1] / l2;
        if (c.size() > 2) n += c[2] / (l2 * l2);
        return n;
      }
    }
    return std::nan("");
  }

  SellmeierForm scaled(double factor) const {
    SellmeierForm out = *this;
    if (formula_ == SellmeierFormula::cauchy) {
      for (auto& v : out.coefficients_) v *= factor;
      return out;
    }
    throw ConfigError("only cauchy forms can be scaled");
  }

 private:
  SellmeierFormula formula_ = SellmeierFormula::cauchy;
  std::vector<double> coefficients_{1.5};
  double min_um_ = 0.1;
  double max_um_ = 10.0;
};

struct CrystalSpec {
  std::string name;
  SellmeierForm sellmeier_o;
  SellmeierForm sellmeier_e;
  double length_mm = 1.0;
  double cut_angle_deg = 0.0;
  std::string source_citation;

  double length_m() const noexcept { return length_mm * 1e-3; }

  void validate() const {
    if (!(length_mm > 0.0)) throw ConfigError("crystal " + name + ": length must be > 0");
    if (!(cut_angle_deg >= 0.0 && cut_angle_deg <= 90.0))
      throw ConfigError("crystal " + name + ": cut angle must lie in [0, 90] degrees");
  }
};

/// Dispersion records keyed by name; length and cut angle are left at their
/// defaults and filled in by the caller.
class CrystalDatabase {
 public:
  CrystalDatabase() = default;

  static CrystalDatabase parse(std::string_view text, std::string source = "<crystals>") {
    return from_document(kv::parse(text, std::move(source)));
  }

  static CrystalDatabase load(const std::string& path) { return from_document(kv::parse_file(path)); }

  void add(CrystalSpec spec) {
    auto key = spec.name;
    if (!records_.emplace(key, std::move(spec)).second) throw ConfigError("duplicate crystal '" + key + "'");
  }

  const CrystalSpec* find(std::string_view name) const {
    auto it = records_.find(std::string(name));
    return it == records_.end() ? nullptr : &it->second;
  }

  const CrystalSpec& at(std::string_view name) const {
    if (const auto* c = find(name)) return *c;
    throw ConfigError("unknown crystal '" + std::string(name) + "'");
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : records_) out.push_back(k);
    return out;
  }

  /// Reads the dispersion fields of one record (name, formula_id,
  /// coefficients_o, coefficients_e, valid_um_min, valid_um_max,
  /// source_citation).
  static CrystalSpec read_record(kv::Reader& r) {
    CrystalSpec c;
    c.name = r.string("name");
    const auto formula_text = r.string("formula_id");
    const auto formula = parse_formula(formula_text);
    if (!formula) throw r.error("formula_id", "unknown formula '" + formula_text + "'");
    const auto co = r.list("coefficients_o");
    const auto ce = r.list("coefficients_e");
    const double lo = r.number("valid_um_min");
    const double hi = r.number("valid_um_max");
    c.source_citation = r.string_opt("source_citation").value_or("");
    try {
      c.sellmeier_o = SellmeierForm(*formula, co, lo, hi);
      c.sellmeier_e = SellmeierForm(*formula, ce, lo, hi);
    } catch (const ConfigError& e) {
      throw r.error("formula_id", e.what());
    }
    return c;
  }

 private:
  static CrystalDatabase from_document(const kv::Document& doc) {
    CrystalDatabase db;
    for (const auto& section : doc.sections) {
      kv::Reader r(doc, section);
      if (section.name != "crystal") {
        throw ConfigError(doc.source + ":" + std::to_string(section.line) + ": unknown section [" + section.name +
                          "], expected [crystal]");
      }
      db.add(read_record(r));
      r.finish();
    }
    return db;
  }

  std::map<std::string, CrystalSpec> records_;
};

}  // namespace pdc
