fn main() -> std::process::ExitCode {
    funcal::cli::main_entry()
}
