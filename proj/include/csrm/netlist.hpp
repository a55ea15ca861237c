#pragma once

// Plain-text netlist dump and parse for ReluctanceNetwork.
//
// Format (one record per line, '#' starts a comment, fields are separated by
// whitespace, numbers use the shortest round-trip decimal form):
//
//   netlist 1
//   state <theta_deg> <iA> <iB> <iC> <airgap_length_m>
//   tooth <index> <axis_deg> <airgap_branch_id or -1>
//   node <id> <kind>
//   branch <id> <from> <to> Iron    <length_m> <area_m2> <material>
//   branch <id> <from> <to> Airgap  <permeance_H> <stator_tooth>
//   branch <id> <from> <to> Pm      <Fc_At> <Rm_per_H> <Pm1|Pm2>
//   branch <id> <from> <to> Coil    <length_m> <area_m2> <material> <turns> <mmf_At> <phase A|B|C>
//   branch <id> <from> <to> Leakage <permeance_H>
//
// Node and branch ids must be listed densely in increasing order. Material
// names are resolved against the caller's table when parsing.

#include <charconv>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "csrm/materials.hpp"
#include "csrm/mec.hpp"

namespace csrm {

inline constexpr int kNetlistVersion = 1;

class NetlistError : public std::runtime_error {
 public:
  NetlistError(int line, const std::string& what)
      : std::runtime_error("netlist line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

using MaterialTable = std::map<std::string, std::shared_ptr<const BhCurve>>;

namespace detail {

inline std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline const char* phase_letter(int p) {
  static const char* letters[] = {"A", "B", "C"};
  return (p >= 0 && p < 3) ? letters[p] : "?";
}

inline std::optional<NodeKind> parse_node_kind(const std::string& s) {
  for (auto k : {NodeKind::StatorYoke, NodeKind::StatorTooth, NodeKind::RotorTooth, NodeKind::RotorCore, NodeKind::Reference})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

}  // namespace detail

inline void write_netlist(std::ostream& os, const ReluctanceNetwork& net) {
  using detail::num;
  os << "netlist " << kNetlistVersion << "\n";
  os << "state " << num(net.rotor_angle_deg) << ' ' << num(net.phase_currents[0]) << ' ' << num(net.phase_currents[1]) << ' '
     << num(net.phase_currents[2]) << ' ' << num(net.airgap_length) << "\n";
  for (std::size_t j = 0; j < net.tooth_axis_deg.size(); ++j) {
    const int gap = j < net.airgap_branches.size() ? net.airgap_branches[j] : -1;
    os << "tooth " << j << ' ' << num(net.tooth_axis_deg[j]) << ' ' << gap << "\n";
  }
  for (const auto& n : net.nodes) os << "node " << n.id << ' ' << to_string(n.kind) << "\n";
  for (const auto& b : net.branches) {
    os << "branch " << b.id << ' ' << b.from << ' ' << b.to << ' ' << element_kind(b.element);
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, IronReluctance>) {
            os << ' ' << num(e.length) << ' ' << num(e.area) << ' ' << e.material_ref;
          } else if constexpr (std::is_same_v<T, AirgapPermeance>) {
            os << ' ' << num(e.permeance) << ' ' << e.stator_tooth;
          } else if constexpr (std::is_same_v<T, PmBranch>) {
            os << ' ' << num(e.fc) << ' ' << num(e.rm) << ' ' << (e.tag == PmTag::Pm1 ? "Pm1" : "Pm2");
          } else if constexpr (std::is_same_v<T, CoilMmf>) {
            os << ' ' << num(e.iron.length) << ' ' << num(e.iron.area) << ' ' << e.iron.material_ref << ' ' << num(e.turns) << ' '
               << num(e.mmf) << ' ' << detail::phase_letter(e.phase);
          } else {
            os << ' ' << num(e.permeance);
          }
        },
        b.element);
    os << "\n";
  }
}

inline std::string dump_netlist(const ReluctanceNetwork& net) {
  std::ostringstream os;
  write_netlist(os, net);
  return os.str();
}

inline ReluctanceNetwork read_netlist(std::istream& is, const MaterialTable& materials) {
  ReluctanceNetwork net;
  std::string raw;
  int line_no = 0;
  bool header = false;

  for (;;) {
    if (!std::getline(is, raw)) break;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;

    auto fail = [&](const std::string& what) -> NetlistError { return NetlistError(line_no, what); };
    auto number = [&](std::size_t i) {
      if (i >= tok.size()) throw fail("missing field " + std::to_string(i));
      double v = 0.0;
      const auto& s = tok[i];
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw fail("bad number '" + s + "'");
      return v;
    };
    auto integer = [&](std::size_t i) {
      if (i >= tok.size()) throw fail("missing field " + std::to_string(i));
      int v = 0;
      const auto& s = tok[i];
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw fail("bad integer '" + s + "'");
      return v;
    };
    auto expect_fields = [&](std::size_t n) {
      if (tok.size() != n) throw fail("expected " + std::to_string(n) + " fields, got " + std::to_string(tok.size()));
    };
    auto material = [&](const std::string& name) {
      const auto it = materials.find(name);
      if (it == materials.end()) throw fail("unknown material '" + name + "'");
      return it->second;
    };

    const std::string& rec = tok[0];
    if (!header) {
      if (rec != "netlist") throw fail("missing 'netlist' header");
      expect_fields(2);
      if (integer(1) != kNetlistVersion) throw fail("unsupported netlist version " + tok[1]);
      header = true;
    } else if (rec == "state") {
      expect_fields(6);
      net.rotor_angle_deg = number(1);
      net.phase_currents = {number(2), number(3), number(4)};
      net.airgap_length = number(5);
    } else if (rec == "tooth") {
      expect_fields(4);
      const int j = integer(1);
      if (j != static_cast<int>(net.tooth_axis_deg.size())) throw fail("tooth indices must be dense and ordered");
      net.tooth_axis_deg.push_back(number(2));
      net.airgap_branches.push_back(integer(3));
    } else if (rec == "node") {
      expect_fields(3);
      if (integer(1) != static_cast<int>(net.nodes.size())) throw fail("node ids must be dense and ordered");
      const auto kind = detail::parse_node_kind(tok[2]);
      if (!kind) throw fail("unknown node kind '" + tok[2] + "'");
      net.add_node(*kind);
    } else if (rec == "branch") {
      if (tok.size() < 5) throw fail("truncated branch record");
      if (integer(1) != static_cast<int>(net.branches.size())) throw fail("branch ids must be dense and ordered");
      const int from = integer(2), to = integer(3);
      const int n = static_cast<int>(net.nodes.size());
      if (from < 0 || from >= n || to < 0 || to >= n) throw fail("branch endpoint refers to an undeclared node");
      const std::string& kind = tok[4];
      Element e;
      if (kind == "Iron") {
        expect_fields(8);
        e = IronReluctance{number(5), number(6), material(tok[7]), tok[7]};
      } else if (kind == "Airgap") {
        expect_fields(7);
        e = AirgapPermeance{number(5), integer(6)};
      } else if (kind == "Pm") {
        expect_fields(8);
        if (tok[7] != "Pm1" && tok[7] != "Pm2") throw fail("unknown magnet tag '" + tok[7] + "'");
        e = PmBranch{number(5), number(6), tok[7] == "Pm1" ? PmTag::Pm1 : PmTag::Pm2};
      } else if (kind == "Coil") {
        expect_fields(11);
        int phase = -1;
        for (int p = 0; p < 3; ++p)
          if (tok[10] == detail::phase_letter(p)) phase = p;
        if (phase < 0) throw fail("coil phase must be A, B or C");
        e = CoilMmf{IronReluctance{number(5), number(6), material(tok[7]), tok[7]}, number(8), number(9), phase};
      } else if (kind == "Leakage") {
        expect_fields(6);
        e = LeakagePermeance{number(5)};
      } else {
        throw fail("unknown element kind '" + kind + "'");
      }
      net.add_branch(from, to, std::move(e));
    } else {
      throw fail("unknown record '" + rec + "'");
    }
  }
  if (!header) throw NetlistError(line_no, "empty netlist");
  for (int k : net.airgap_branches)
    if (k >= static_cast<int>(net.branches.size())) throw NetlistError(line_no, "tooth refers to an unknown airgap branch");
  return net;
}

inline ReluctanceNetwork parse_netlist(const std::string& text, const MaterialTable& materials) {
  std::istringstream is(text);
  return read_netlist(is, materials);
}

}  // namespace csrm
