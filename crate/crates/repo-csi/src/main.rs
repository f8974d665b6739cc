use std::process::ExitCode;

fn main() -> ExitCode {
    repo_csi::cli::main()
}
