use std::process::ExitCode;

fn main() -> ExitCode {
    subgraph_order::cli::main_from(std::env::args_os())
}
