#pragma once

#include <string>
#include <string_view>

#include "repcrash/trace.hpp"

namespace repcrash {

// Compiles a workload program into a trace. One operation per statement;
// backtraces follow the lexical nesting of `fn NAME { ... }` blocks, with
// `source_name` and the program's line numbers as frame locations.
//
//   fn NAME { ... }                      nested blocks are inline calls
//   write PATH "BYTES" @OFFSET           pwrite takes the same form
//   rename SRC DST
//   unlink PATH | create PATH | mkdir PATH | open PATH | close PATH
//   fsync PATH | fdatasync PATH | fsyncdir PATH | sync
//   store TYPE.INSTANCE.FIELD @ADDR LEN "BYTES"
//   flush ADDR LEN | fence | msync ADDR LEN
//
// Statements end at a newline or ';'. '#' starts a comment. Strings accept
// \n \t \\ \" and \xHH escapes. Throws DslError.
Trace synth_workload(std::string_view program, Mode mode,
                     std::string_view source_name = "workload.dsl");

}  // namespace repcrash
