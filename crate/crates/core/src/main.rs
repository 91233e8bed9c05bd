use std::io::Write;

fn main() {
    match liectrl::cli::run(std::env::args_os()) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.report).expect("reports serialize");
            let _ = writeln!(std::io::stdout(), "{text}");
            std::process::exit(outcome.exit_code);
        }
        Err(e) => {
            let code = if e.use_stderr() { liectrl::cli::EXIT_ERROR } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    }
}
