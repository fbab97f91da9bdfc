#include <array>
#include <utility>

#include "hpmdiag/perfgroup.hpp"

// Builtin group definitions over the canonical event schema (docs/events.md).
// Memory and L3 volumes assume 64-byte cache lines; ship a user group file to
// override for other line sizes.

namespace hpmdiag {

namespace {

constexpr std::string_view kCpi = R"(SHORT Cycles per instruction
# CPI is appended to every analysis run.
EVENTSET
FIXC0 INSTR_RETIRED
FIXC1 CPU_CLK_UNHALTED

METRICS
RUNTIME [s] time
CPI FIXC1/FIXC0
IPC FIXC0/FIXC1
MIPS [MInstr/s] 1.0E-06*FIXC0/time
)";

constexpr std::string_view kFlopsDp = R"(SHORT Double precision MFlop/s
EVENTSET
PMC0 FP_OPS_PACKED_DP
PMC1 FP_OPS_SCALAR_DP

METRICS
DP_MFLOPS [MFlop/s] 1.0E-06*(PMC0*2.0+PMC1)/time
PACKED_DP_MUOPS [MUOPS/s] 1.0E-06*PMC0/time
SCALAR_DP_MUOPS [MUOPS/s] 1.0E-06*PMC1/time
DP_VECTOR_RATIO PMC0/(PMC0+PMC1)
)";

constexpr std::string_view kFlopsSp = R"(SHORT Single precision MFlop/s
EVENTSET
PMC0 FP_OPS_PACKED_SP
PMC1 FP_OPS_SCALAR_SP

METRICS
SP_MFLOPS [MFlop/s] 1.0E-06*(PMC0*4.0+PMC1)/time
PACKED_SP_MUOPS [MUOPS/s] 1.0E-06*PMC0/time
SCALAR_SP_MUOPS [MUOPS/s] 1.0E-06*PMC1/time
SP_VECTOR_RATIO PMC0/(PMC0+PMC1)
)";

constexpr std::string_view kL3 = R"(SHORT Outer-level cache bandwidth
EVENTSET
PMC0 L3_LINES_IN
PMC1 L3_LINES_OUT

METRICS
L3_LOAD_BW [MByte/s] 1.0E-06*PMC0*64.0/time
L3_EVICT_BW [MByte/s] 1.0E-06*PMC1*64.0/time
L3_BW [MByte/s] 1.0E-06*(PMC0+PMC1)*64.0/time
L3_VOLUME [GByte] 1.0E-09*(PMC0+PMC1)*64.0
)";

constexpr std::string_view kMem = R"(SHORT Main memory bandwidth
EVENTSET
MBOX0 MEM_LINES_READ
MBOX1 MEM_LINES_WRITE
MBOX2 MEM_LINES_REMOTE

METRICS
MEM_READ_BW [MByte/s] 1.0E-06*MBOX0*64.0/time
MEM_WRITE_BW [MByte/s] 1.0E-06*MBOX1*64.0/time
MEM_BW [MByte/s] 1.0E-06*(MBOX0+MBOX1)*64.0/time
MEM_VOLUME [GByte] 1.0E-09*(MBOX0+MBOX1)*64.0
REMOTE_FRACTION MBOX2/(MBOX0+MBOX1)
)";

// No standard group for this; ratio choice is ours.
constexpr std::string_view kCache = R"(SHORT Cache hit, miss and eviction ratios
EVENTSET
FIXC0 INSTR_RETIRED
PMC0 CACHE_ACCESSES
PMC1 CACHE_MISSES
PMC2 CACHE_EVICTS

METRICS
CACHE_MISS_RATIO PMC1/PMC0
CACHE_HIT_RATIO (PMC0-PMC1)/PMC0
CACHE_MISS_RATE PMC1/FIXC0
EVICTS_PER_INSTR PMC2/FIXC0
)";

// Same caveat as CACHE: load/store counts and their share of all instructions.
constexpr std::string_view kData = R"(SHORT Load/store instruction mix
EVENTSET
FIXC0 INSTR_RETIRED
PMC0 LOADS_RETIRED
PMC1 STORES_RETIRED

METRICS
LOAD_TO_STORE PMC0/PMC1
LDST_FRACTION (PMC0+PMC1)/FIXC0
)";

constexpr std::array<std::pair<std::string_view, std::string_view>, 7> kSources{{
    {"FLOPS_DP", kFlopsDp},
    {"FLOPS_SP", kFlopsSp},
    {"L3", kL3},
    {"MEM", kMem},
    {"CACHE", kCache},
    {"DATA", kData},
    {"CPI", kCpi},
}};

GroupRegistry make_builtin_registry() {
  GroupRegistry registry;
  for (const auto& [name, source] : kSources) registry.add(parse_group_file(source, std::string(name)));
  return registry;
}

}  // namespace

const GroupRegistry& builtin_groups() {
  static const GroupRegistry registry = make_builtin_registry();
  return registry;
}

std::string_view builtin_group_source(std::string_view name) {
  for (const auto& [group, source] : kSources) {
    if (group == name) return source;
  }
  return {};
}

}  // namespace hpmdiag
