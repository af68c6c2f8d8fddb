#pragma once

namespace loorisk {

/// Exit codes: 0 success, 1 numerical failure, 2 usage or config error.
int cli_main(int argc, char** argv);

}  // namespace loorisk
