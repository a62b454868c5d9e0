fn main() -> std::process::ExitCode {
    mapseg_cli::main_with(std::env::args_os())
}
