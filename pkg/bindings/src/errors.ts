/** Error raised when the toolkit rejects an input or spec document. */
export class CtaugError extends Error {
  readonly kind: string;
  readonly exitCode: number;

  constructor(message: string, kind = "Error", exitCode = 4) {
    super(message);
    this.name = "CtaugError";
    this.kind = kind;
    this.exitCode = exitCode;
  }
}

/** Validation failure (precondition or spec schema violation, exit code 2). */
export class ValidationError extends CtaugError {
  constructor(message: string) {
    super(message, "ValidationError", 2);
    this.name = "ValidationError";
  }
}
