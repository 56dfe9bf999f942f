#pragma once

namespace fieldrec {

// argv as in main(). Failures come back as a nonzero status with a one-line
// diagnostic on stderr; output files appear atomically or not at all.
int cli_main(int argc, char** argv);

}  // namespace fieldrec
