#pragma once

#include <stdexcept>
#include <string>

namespace mpcb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define MPCB_DEFINE_ERROR(Name)                                                  \
    class Name : public Error {                                                  \
    public:                                                                      \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {}     \
    }

// ocp-core
MPCB_DEFINE_ERROR(DuplicateStateName);
MPCB_DEFINE_ERROR(IncompatibleInputSpace);
MPCB_DEFINE_ERROR(MissingDynamics);
MPCB_DEFINE_ERROR(SchemaMismatch);
MPCB_DEFINE_ERROR(UnresolvedRead);
// primitives / assigner
MPCB_DEFINE_ERROR(MissingTarget);
MPCB_DEFINE_ERROR(NoAdjacentLane);
MPCB_DEFINE_ERROR(InvalidParams);
// mppi
MPCB_DEFINE_ERROR(NonFiniteCost);
// sim
MPCB_DEFINE_ERROR(SpawnFailure);
// planner
MPCB_DEFINE_ERROR(ApiError);
MPCB_DEFINE_ERROR(ParseError);
// trace-store / harness
MPCB_DEFINE_ERROR(IoError);
MPCB_DEFINE_ERROR(SchemaError);
MPCB_DEFINE_ERROR(MalformedTrace);
MPCB_DEFINE_ERROR(ConfigError);

#undef MPCB_DEFINE_ERROR

}  // namespace mpcb
