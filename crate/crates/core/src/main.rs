fn main() -> std::process::ExitCode {
    chatwork::cli::main_with_args(std::env::args_os())
}
