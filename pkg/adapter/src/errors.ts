/** Error types mapped onto CLI exit codes (2 contract/geometry, 3 environment). */

export class ContractError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ContractError";
  }
}

/** Requested grid geometry does not match the model's visual token count. */
export class GeometryError extends ContractError {
  constructor(message: string) {
    super(message);
    this.name = "GeometryError";
  }
}

/** The model backend cannot run here (missing weights, package, hardware). */
export class EnvironmentError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "EnvironmentError";
  }
}
