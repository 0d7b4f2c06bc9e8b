#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "spinsim/analysis.hpp"
#include "spinsim/sequence.hpp"

namespace spinsim {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, int line, int column = 0);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct Scenario {
  std::string name;
  double temperature_k = 300.0;
  double field_t = 11.7;
  double polarization = 0.0;
};

struct SystemFile {
  SpinSystem system;
  std::optional<RelaxationModel> relaxation;
  std::optional<BindingModel> binding;
  Scenario scenario;
};

// INI-style system/relaxation/binding/scenario config.  Unknown keys are
// rejected with the offending line number.
SystemFile parse_system(const std::string& text);
std::string serialize_system(const SystemFile& file);

// Line-oriented sequence DSL; see the grammar in the README.  Timing fields
// accept arithmetic expressions over the parameter table.
SequenceProgram parse_sequence(const std::string& text,
                               const std::map<std::string, double>& parameters = {});
std::string serialize_sequence(const SequenceProgram& program);

DecayCurve read_curve(std::istream& in);
void write_curve(std::ostream& out, const DecayCurve& curve);
DecayCurve read_curve_file(const std::string& path);
void write_curve_file(const std::string& path, const DecayCurve& curve);

}  // namespace spinsim
